//! Scored-trace output records and the JSONL writer shared by all scorers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Scoring method tag written in the `method` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rcc,
    LogitsFinal,
    LogitsAverage,
    SelfConsistency,
    Verbalized,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Rcc,
        Method::LogitsFinal,
        Method::LogitsAverage,
        Method::SelfConsistency,
        Method::Verbalized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rcc => "rcc",
            Method::LogitsFinal => "logits_final",
            Method::LogitsAverage => "logits_average",
            Method::SelfConsistency => "self_consistency",
            Method::Verbalized => "verbalized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Steps whose filtered attention was empty and fell back to the plain mean.
    pub fallback_steps: usize,
    pub n_steps: usize,
}

/// One line of `scores.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTrace {
    pub id: String,
    pub method: Method,
    #[serde(default)]
    pub params: Params,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

impl ScoredTrace {
    pub fn new(id: impl Into<String>, method: Method, confidence: f64) -> Self {
        Self {
            id: id.into(),
            method,
            params: Params::default(),
            confidence,
            diagnostics: None,
        }
    }
}

pub fn write_scores<'a, W: Write>(
    mut out: W,
    scores: impl IntoIterator<Item = &'a ScoredTrace>,
) -> std::io::Result<()> {
    for s in scores {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
