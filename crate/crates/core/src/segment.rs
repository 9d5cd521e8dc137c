//! Splitting a flat response token sequence into reasoning steps.

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{InferenceTrace, ReasoningStep, TokenRecord};

pub const DEFAULT_MARKERS: &[&str] = &[
    r"Step \d+",
    "First,",
    "Second,",
    "Next,",
    "Finally,",
    "Therefore",
];

pub const DEFAULT_MIN_STEP_TOKENS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationMode {
    ExplicitMarkers,
    Sentence,
    /// Producer already segmented; keep steps as given.
    #[default]
    PreSegmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationRule {
    pub mode: SegmentationMode,
    pub marker_patterns: Vec<String>,
    pub min_step_tokens: usize,
}

impl Default for SegmentationRule {
    fn default() -> Self {
        Self {
            mode: SegmentationMode::PreSegmented,
            marker_patterns: DEFAULT_MARKERS.iter().map(|s| s.to_string()).collect(),
            min_step_tokens: DEFAULT_MIN_STEP_TOKENS,
        }
    }
}

impl SegmentationRule {
    pub fn pre_segmented() -> Self {
        Self::default()
    }

    pub fn sentence(min_step_tokens: usize) -> Self {
        Self {
            mode: SegmentationMode::Sentence,
            min_step_tokens,
            ..Self::default()
        }
    }

    pub fn explicit_markers(patterns: &[&str], min_step_tokens: usize) -> Self {
        Self {
            mode: SegmentationMode::ExplicitMarkers,
            marker_patterns: patterns.iter().map(|s| s.to_string()).collect(),
            min_step_tokens,
        }
    }

    /// Compiles the rule, checking its invariants.
    pub fn compile(&self) -> Result<Segmenter> {
        if self.min_step_tokens == 0 {
            return Err(Error::Rule("min_step_tokens must be positive".into()));
        }
        let markers = match self.mode {
            SegmentationMode::ExplicitMarkers => {
                if self.marker_patterns.is_empty() {
                    return Err(Error::Rule(
                        "explicit_markers mode needs at least one pattern".into(),
                    ));
                }
                let alternation = self
                    .marker_patterns
                    .iter()
                    .map(|p| format!("(?:{p})"))
                    .collect::<Vec<_>>()
                    .join("|");
                Some(Regex::new(&alternation).map_err(|e| Error::Rule(e.to_string()))?)
            }
            _ => None,
        };
        Ok(Segmenter {
            mode: self.mode,
            markers,
            min_step_tokens: self.min_step_tokens,
        })
    }
}

/// A compiled [`SegmentationRule`].
#[derive(Debug, Clone)]
pub struct Segmenter {
    mode: SegmentationMode,
    markers: Option<Regex>,
    min_step_tokens: usize,
}

impl Segmenter {
    pub fn mode(&self) -> SegmentationMode {
        self.mode
    }

    /// Partitions `tokens` into steps. Concatenating the output reproduces the input.
    pub fn segment(&self, tokens: &[TokenRecord]) -> Vec<ReasoningStep> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let boundaries = match self.mode {
            SegmentationMode::PreSegmented => {
                return vec![ReasoningStep::new(tokens.to_vec())];
            }
            SegmentationMode::Sentence => sentence_boundaries(tokens),
            SegmentationMode::ExplicitMarkers => {
                marker_boundaries(tokens, self.markers.as_ref().expect("compiled markers"))
            }
        };
        let sizes = merge_short(
            fragment_sizes(&boundaries, tokens.len()),
            self.min_step_tokens,
        );
        let mut out = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for len in sizes {
            out.push(ReasoningStep::new(tokens[start..start + len].to_vec()));
            start += len;
        }
        out
    }

    /// Re-segments a trace's reasoning tokens. The instruction and answer are
    /// never touched; in pre-segmented mode the trace is returned unchanged.
    pub fn apply(&self, trace: &InferenceTrace) -> InferenceTrace {
        let mut out = trace.clone();
        if self.mode != SegmentationMode::PreSegmented {
            let flat: Vec<TokenRecord> = trace
                .steps
                .iter()
                .flat_map(|s| s.tokens.iter().cloned())
                .collect();
            out.steps = self.segment(&flat);
        }
        out
    }
}

/// Convenience wrapper: compile `rule` and segment `tokens`.
pub fn segment(tokens: &[TokenRecord], rule: &SegmentationRule) -> Result<Vec<ReasoningStep>> {
    Ok(rule.compile()?.segment(tokens))
}

fn ends_sentence(text: &str) -> bool {
    if text.ends_with('\n') {
        return true;
    }
    matches!(
        text.trim_end_matches([' ', '\t', '\r']).chars().last(),
        Some('.' | '!' | '?')
    )
}

/// Start indices of every fragment after the first.
fn sentence_boundaries(tokens: &[TokenRecord]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| *i + 1 < tokens.len() && ends_sentence(&t.text))
        .map(|(i, _)| i + 1)
        .collect()
}

fn marker_boundaries(tokens: &[TokenRecord], markers: &Regex) -> Vec<usize> {
    let mut text = String::new();
    // token_ends[i] = byte offset one past token i
    let mut token_ends = Vec::with_capacity(tokens.len());
    for t in tokens {
        text.push_str(&t.text);
        token_ends.push(text.len());
    }
    let mut out: Vec<usize> = Vec::new();
    for m in markers.find_iter(&text) {
        if m.start() == m.end() {
            continue;
        }
        let tok = token_ends.partition_point(|&end| end <= m.start());
        if tok > 0 && out.last() != Some(&tok) {
            out.push(tok);
        }
    }
    out
}

fn fragment_sizes(boundaries: &[usize], len: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(boundaries.len() + 1);
    let mut start = 0;
    for &b in boundaries {
        sizes.push(b - start);
        start = b;
    }
    sizes.push(len - start);
    sizes
}

/// Merges fragments shorter than `min` into their successor; a short final
/// fragment is merged into its predecessor.
fn merge_short(sizes: Vec<usize>, min: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(sizes.len());
    let mut pending = 0;
    for s in sizes {
        pending += s;
        if pending >= min {
            out.push(pending);
            pending = 0;
        }
    }
    if pending > 0 {
        match out.last_mut() {
            Some(last) => *last += pending,
            None => out.push(pending),
        }
    }
    out
}
