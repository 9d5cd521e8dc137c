//! Inter-step attention: scaled dot products between consecutive chain steps,
//! row-wise softmax, and the Heaviside threshold filter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{BinaryMatrix, Matrix};
use crate::trace::{InferenceTrace, ReasoningStep};

/// Attention between chain step `s_i` (rows) and `s_{i+1}` (columns).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttentionPair {
    pub raw: Matrix,
    pub normalized: Matrix,
    pub filtered: BinaryMatrix,
    pub mu: f64,
}

impl AttentionPair {
    pub fn from_raw(raw: Matrix, mu: f64) -> Self {
        let normalized = normalize_rows(&raw);
        let filtered = threshold_filter(&normalized, mu);
        Self {
            raw,
            normalized,
            filtered,
            mu,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

fn step_vectors<'a>(step: &'a ReasoningStep, d: usize, which: &str) -> Result<Vec<&'a [f64]>> {
    step.tokens
        .iter()
        .enumerate()
        .map(|(k, t)| match &t.vector {
            Some(v) if v.len() == d => Ok(v.as_slice()),
            Some(v) => Err(Error::Dimension {
                trace_id: String::new(),
                location: format!("{which} token {k}"),
                expected: d,
                found: v.len(),
            }),
            None => Err(Error::Dimension {
                trace_id: String::new(),
                location: format!("{which} token {k} (no vector)"),
                expected: d,
                found: 0,
            }),
        })
        .collect()
}

/// Scaled dot-product matrix: entry `[j][k] = prev_j · next_k / sqrt(d)`.
pub fn attention_matrix(prev: &ReasoningStep, next: &ReasoningStep, d: usize) -> Result<Matrix> {
    if d == 0 {
        return Err(Error::Domain {
            name: "embedding_dim",
            value: 0.0,
            range: ">= 1",
        });
    }
    let rows = step_vectors(prev, d, "prev")?;
    let cols = step_vectors(next, d, "next")?;
    let scale = (d as f64).sqrt();
    let mut out = Matrix::zeros(rows.len(), cols.len());
    for (j, x) in rows.iter().enumerate() {
        for (k, y) in cols.iter().enumerate() {
            out.row_mut(j)[k] = dot(x, y) / scale;
        }
    }
    Ok(out)
}

/// Numerically stable row-wise softmax.
pub fn normalize_rows(raw: &Matrix) -> Matrix {
    let mut out = raw.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Heaviside filter with `H(0) = 1`: keeps entries `>= mu`.
pub fn threshold_filter(normalized: &Matrix, mu: f64) -> BinaryMatrix {
    normalized.map(|&v| u8::from(v >= mu))
}

/// Builds the attention chain `s_0 -> s_1 -> ... -> s_n` of a trace.
///
/// Precomputed raw matrices are used verbatim when present; otherwise token
/// vectors are required.
pub fn build_chain(trace: &InferenceTrace, mu: f64) -> Result<Vec<AttentionPair>> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            range: "[0, 1]",
        });
    }
    if let Some(mats) = &trace.precomputed_attention {
        let steps: Vec<&ReasoningStep> = trace.chain().collect();
        if mats.len() != steps.len() - 1 {
            return Err(Error::Dimension {
                trace_id: trace.id.clone(),
                location: "precomputed_attention (matrix count)".into(),
                expected: steps.len() - 1,
                found: mats.len(),
            });
        }
        for (i, m) in mats.iter().enumerate() {
            let expected = (steps[i].len(), steps[i + 1].len());
            if m.shape() != expected {
                return Err(Error::Shape(format!(
                    "trace {}: precomputed_attention[{i}] is {:?}, expected {:?}",
                    trace.id,
                    m.shape(),
                    expected
                )));
            }
        }
        return Ok(mats
            .iter()
            .map(|m| AttentionPair::from_raw(m.clone(), mu))
            .collect());
    }
    if !trace.has_vectors() {
        return Err(Error::MissingVectors {
            trace_id: trace.id.clone(),
        });
    }
    let d = trace
        .embedding_dim
        .or_else(|| trace.instruction.tokens[0].vector.as_ref().map(Vec::len))
        .unwrap_or(0);
    let steps: Vec<&ReasoningStep> = trace.chain().collect();
    steps
        .windows(2)
        .map(|w| {
            attention_matrix(w[0], w[1], d)
                .map(|raw| AttentionPair::from_raw(raw, mu))
                .map_err(|e| match e {
                    Error::Dimension {
                        location,
                        expected,
                        found,
                        ..
                    } => Error::Dimension {
                        trace_id: trace.id.clone(),
                        location,
                        expected,
                        found,
                    },
                    other => other,
                })
        })
        .collect()
}
