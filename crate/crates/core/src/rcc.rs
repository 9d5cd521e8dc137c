//! Recurrent confidence chain scoring.
//!
//! For each generated step `s_i` the filtered attention from `s_{i-1}` selects
//! which of the step's token confidences count. Each source row with at least
//! one surviving link contributes the mean confidence of its linked tokens; the
//! step's correlated confidence `q_i` is the mean over those rows. The
//! accumulated confidence follows `p_1 = q_1`, `p_i = δ q_i + (1 - δ) p_{i-1}`,
//! and the trace score is `p_n`.

use serde::Serialize;

use crate::attention::{build_chain, AttentionPair};
use crate::error::{Error, Result};
use crate::matrix::BinaryMatrix;
use crate::score::{Diagnostics, Method, Params, ScoredTrace};
use crate::segment::{SegmentationRule, Segmenter};
use crate::trace::InferenceTrace;

/// Correlated confidence of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepConfidence {
    pub q: f64,
    /// No row of the filter had a surviving entry; `q` is the plain mean.
    pub fallback: bool,
}

/// Correlated confidence `q_i` from the filter `W_{i-1}` (shape
/// `L_prev x L_cur`) and the current step's token confidences.
pub fn correlated_confidence(filtered: &BinaryMatrix, confidences: &[f64]) -> Result<f64> {
    correlated_confidence_detail(filtered, confidences).map(|s| s.q)
}

pub fn correlated_confidence_detail(
    filtered: &BinaryMatrix,
    confidences: &[f64],
) -> Result<StepConfidence> {
    if confidences.is_empty() {
        return Err(Error::EmptyChain);
    }
    if filtered.cols() != confidences.len() {
        return Err(Error::Shape(format!(
            "filter has {} columns but the step has {} confidences",
            filtered.cols(),
            confidences.len()
        )));
    }
    let (lo, hi) = confidences
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
            (lo.min(c), hi.max(c))
        });

    let mut row_sum = 0.0;
    let mut live_rows = 0usize;
    for row in filtered.iter_rows() {
        let mut acc = 0.0;
        let mut survivors = 0usize;
        for (&w, &c) in row.iter().zip(confidences) {
            if w != 0 {
                acc += c;
                survivors += 1;
            }
        }
        if survivors > 0 {
            row_sum += acc / survivors as f64;
            live_rows += 1;
        }
    }
    let (q, fallback) = if live_rows > 0 {
        (row_sum / live_rows as f64, false)
    } else {
        (
            confidences.iter().sum::<f64>() / confidences.len() as f64,
            true,
        )
    };
    // a mean of values in [lo, hi]; clamp away last-ulp rounding drift
    Ok(StepConfidence {
        q: q.clamp(lo, hi),
        fallback,
    })
}

/// Per-step correlated confidences and their running accumulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceTrajectory {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub delta: f64,
    pub final_confidence: f64,
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "delta",
            value: delta,
            range: "(0, 1]",
        })
    }
}

/// Runs the recurrence `p_1 = q_1`, `p_i = δ q_i + (1 - δ) p_{i-1}`.
pub fn propagate(q: &[f64], delta: f64) -> Result<ConfidenceTrajectory> {
    check_delta(delta)?;
    let Some(&first) = q.first() else {
        return Err(Error::EmptyChain);
    };
    if let Some(&bad) = q.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain {
            name: "q",
            value: bad,
            range: "[0, 1]",
        });
    }
    let mut p = Vec::with_capacity(q.len());
    p.push(first);
    for &qi in &q[1..] {
        let prev = *p.last().unwrap();
        p.push(delta * qi + (1.0 - delta) * prev);
    }
    Ok(ConfidenceTrajectory {
        final_confidence: *p.last().unwrap(),
        q: q.to_vec(),
        p,
        delta,
    })
}

/// Everything computed for one trace, for debugging and fixtures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RccTrace {
    pub chain: Vec<AttentionPair>,
    pub steps: Vec<StepConfidence>,
    pub trajectory: ConfidenceTrajectory,
}

/// Immutable RCC scoring configuration.
#[derive(Debug, Clone)]
pub struct RccScorer {
    mu: f64,
    delta: f64,
    segmenter: Segmenter,
}

impl RccScorer {
    pub fn new(mu: f64, delta: f64, rule: &SegmentationRule) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::Domain {
                name: "mu",
                value: mu,
                range: "[0, 1]",
            });
        }
        check_delta(delta)?;
        Ok(Self {
            mu,
            delta,
            segmenter: rule.compile()?,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Same attention configuration with a different propagation weight.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self {
            delta,
            ..self.clone()
        })
    }

    /// Correlated confidences `q_1..q_n` together with the attention chain.
    /// Independent of δ.
    pub fn step_confidences(
        &self,
        trace: &InferenceTrace,
    ) -> Result<(Vec<AttentionPair>, Vec<StepConfidence>)> {
        let segmented;
        let trace = if self.segmenter.mode() == crate::segment::SegmentationMode::PreSegmented {
            trace
        } else {
            segmented = self.segmenter.apply(trace);
            &segmented
        };
        let chain = build_chain(trace, self.mu)?;
        let steps = chain
            .iter()
            .zip(trace.response_steps())
            .map(|(pair, step)| correlated_confidence_detail(&pair.filtered, &step.confidences()))
            .collect::<Result<Vec<_>>>()?;
        Ok((chain, steps))
    }

    pub fn explain(&self, trace: &InferenceTrace) -> Result<RccTrace> {
        let (chain, steps) = self.step_confidences(trace)?;
        let q: Vec<f64> = steps.iter().map(|s| s.q).collect();
        let trajectory = propagate(&q, self.delta)?;
        Ok(RccTrace {
            chain,
            steps,
            trajectory,
        })
    }

    pub fn score(&self, trace: &InferenceTrace) -> Result<ScoredTrace> {
        let (_, steps) = self.step_confidences(trace)?;
        self.finish(&trace.id, &steps)
    }

    /// Builds the output record from precomputed step confidences.
    pub fn finish(&self, id: &str, steps: &[StepConfidence]) -> Result<ScoredTrace> {
        let q: Vec<f64> = steps.iter().map(|s| s.q).collect();
        let trajectory = propagate(&q, self.delta)?;
        let fallback_steps = steps.iter().filter(|s| s.fallback).count();
        if fallback_steps > 0 {
            log::debug!("trace {id}: {fallback_steps} step(s) used the unfiltered mean");
        }
        Ok(ScoredTrace {
            id: id.to_string(),
            method: Method::Rcc,
            params: Params {
                mu: Some(self.mu),
                delta: Some(self.delta),
            },
            confidence: trajectory.final_confidence,
            diagnostics: Some(Diagnostics {
                fallback_steps,
                n_steps: steps.len(),
            }),
        })
    }
}

/// Scores one trace with the recurrent confidence chain.
pub fn score_rcc(
    trace: &InferenceTrace,
    mu: f64,
    delta: f64,
    rule: &SegmentationRule,
) -> Result<ScoredTrace> {
    RccScorer::new(mu, delta, rule)?.score(trace)
}
