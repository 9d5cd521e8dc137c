//! Synthetic labeled trace corpora with known per-step reliability.
//!
//! Each trace draws a step count and a reliability `ρ_i` per generated step
//! (reasoning steps and the answer). With probability `early_corruption_rate`
//! the first step's reliability is replaced by `corruption_reliability`. Token
//! probabilities scatter around `ρ_i`; the label is `Bernoulli(min_i ρ_i)`.
//!
//! Token vectors are laid out in three orthogonal subspaces cycled by step
//! index: a token in step `i` carries a unit "key" at its position in subspace
//! `i mod 3` and a "pointer" of length `γ` at its target's position in subspace
//! `(i + 1) mod 3`. The scaled dot product between step `i` and step `i + 1`
//! is then exactly `γ / sqrt(d)` on the target and zero elsewhere, so every
//! softmax row puts `e^2 / (e^2 + 1) ≈ 0.88` of its mass on the target.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::metrics::LabeledScore;
use crate::trace::{write_traces, InferenceTrace, ReasoningStep, TokenRecord};

pub const META_FIELD: &str = "synth_meta";
const MIN_PROB: f64 = 1e-6;
/// Softmax logit margin of the target column over the others.
const TARGET_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_traces: usize,
    /// Inclusive range of reasoning-step counts (the answer is extra).
    pub steps_range: [usize; 2],
    /// Inclusive range of tokens per step, instruction and answer included.
    pub tokens_per_step_range: [usize; 2],
    pub embedding_dim: usize,
    pub reliability_floor: f64,
    pub reliability_ceil: f64,
    pub confidence_noise: f64,
    pub early_corruption_rate: f64,
    pub corruption_reliability: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_traces: 2000,
            steps_range: [1, 5],
            tokens_per_step_range: [4, 12],
            embedding_dim: 48,
            reliability_floor: 0.8,
            reliability_ceil: 0.99,
            confidence_noise: 0.05,
            early_corruption_rate: 0.2,
            corruption_reliability: 0.4,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        let [s_lo, s_hi] = self.steps_range;
        let [t_lo, t_hi] = self.tokens_per_step_range;
        if s_lo < 1 || s_lo > s_hi {
            return fail(format!(
                "steps_range {:?} must satisfy 1 <= a <= b",
                self.steps_range
            ));
        }
        if t_lo < 1 || t_lo > t_hi {
            return fail(format!(
                "tokens_per_step_range {:?} must satisfy 1 <= a <= b",
                self.tokens_per_step_range
            ));
        }
        let need = (3 * t_hi).max(4);
        if self.embedding_dim < need {
            return fail(format!(
                "embedding_dim {} too small: need at least {need} (3 x max tokens per step)",
                self.embedding_dim
            ));
        }
        // floor == ceil is allowed for constant-reliability corpora
        if !(self.reliability_floor > 0.0
            && self.reliability_floor <= self.reliability_ceil
            && self.reliability_ceil <= 1.0)
        {
            return fail("need 0 < reliability_floor <= reliability_ceil <= 1".into());
        }
        if !(self.confidence_noise >= 0.0 && self.confidence_noise.is_finite()) {
            return fail("confidence_noise must be finite and >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.early_corruption_rate) {
            return fail("early_corruption_rate must lie in [0, 1]".into());
        }
        if !(self.corruption_reliability > 0.0
            && self.corruption_reliability <= self.reliability_floor)
        {
            return fail("corruption_reliability must lie in (0, reliability_floor]".into());
        }
        Ok(())
    }
}

fn trace_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn gen_trace(cfg: &SynthConfig, index: usize) -> InferenceTrace {
    let mut rng = trace_rng(cfg.seed, index);
    let d = cfg.embedding_dim;
    let sub = d / 3;
    let [s_lo, s_hi] = cfg.steps_range;
    let [t_lo, t_hi] = cfg.tokens_per_step_range;

    let n_steps = rng.random_range(s_lo..=s_hi);
    // chain: instruction, n_steps reasoning steps, answer
    let lens: Vec<usize> = (0..n_steps + 2)
        .map(|_| rng.random_range(t_lo..=t_hi))
        .collect();
    let mut rho: Vec<f64> = (0..=n_steps)
        .map(|_| rng.random_range(cfg.reliability_floor..=cfg.reliability_ceil))
        .collect();
    let corrupted = rng.random::<f64>() < cfg.early_corruption_rate;
    if corrupted {
        rho[0] = cfg.corruption_reliability;
    }

    let mut counter = 0usize;
    let mut steps: Vec<ReasoningStep> = Vec::with_capacity(lens.len());
    for (i, &len) in lens.iter().enumerate() {
        let next_len = lens.get(i + 1).copied();
        let gamma = next_len.map(|l| {
            let spread = ((l.max(2) - 1) as f64).ln();
            (d as f64).sqrt() * (spread + TARGET_MARGIN)
        });
        let noise = (i > 0 && cfg.confidence_noise > 0.0)
            .then(|| Normal::new(rho[i - 1], cfg.confidence_noise).expect("finite std"));
        let tokens = (0..len)
            .map(|k| {
                let prob = match (i, &noise) {
                    (0, _) => 1.0,
                    (_, Some(n)) => n.sample(&mut rng).clamp(MIN_PROB, 1.0),
                    (_, None) => rho[i - 1].clamp(MIN_PROB, 1.0),
                };
                let mut v = vec![0.0; d];
                v[(i % 3) * sub + k] = 1.0;
                if let (Some(l), Some(g)) = (next_len, gamma) {
                    let target = rng.random_range(0..l);
                    v[((i + 1) % 3) * sub + target] = g;
                }
                counter += 1;
                TokenRecord::new(format!("t{counter}"), prob).with_vector(v)
            })
            .collect();
        steps.push(ReasoningStep::new(tokens));
    }

    let p_correct = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let correct = rng.random::<f64>() < p_correct;
    let answer = steps.pop().expect("answer step");
    let mut iter = steps.into_iter();
    let instruction = iter.next().expect("instruction step");
    let mut extra = serde_json::Map::new();
    extra.insert(
        META_FIELD.into(),
        json!({ "rho": rho, "p_correct": p_correct, "corrupted": corrupted }),
    );
    InferenceTrace {
        id: format!("synth-{index:06}"),
        embedding_dim: Some(d),
        instruction,
        steps: iter.collect(),
        answer,
        correct: Some(correct),
        verbalized_confidence: None,
        answer_key: None,
        group_id: None,
        precomputed_attention: None,
        extra,
    }
}

/// Generates the corpus in memory. Output depends only on `config`.
pub fn generate(config: &SynthConfig) -> Result<Vec<InferenceTrace>> {
    config.validate()?;
    Ok((0..config.n_traces)
        .into_par_iter()
        .map(|i| gen_trace(config, i))
        .collect())
}

/// Generates the corpus and writes it as JSONL.
pub fn generate_to_file(config: &SynthConfig, path: impl AsRef<Path>) -> Result<usize> {
    let traces = generate(config)?;
    atomic_write(path, |w| write_traces(&mut *w, &traces))?;
    Ok(traces.len())
}

pub fn write_corpus<W: Write>(out: W, traces: &[InferenceTrace]) -> std::io::Result<()> {
    write_traces(out, traces)
}

/// Generator ground truth `P(correct) = min_i ρ_i` paired with each label.
pub fn oracle_scores(traces: &[InferenceTrace]) -> Result<Vec<LabeledScore>> {
    traces
        .iter()
        .map(|t| {
            let p = t
                .extra
                .get(META_FIELD)
                .and_then(|m| m.get("p_correct"))
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::MissingMetadata {
                    trace_id: t.id.clone(),
                })?;
            let correct = t.correct.ok_or_else(|| Error::Unlabeled {
                trace_id: t.id.clone(),
            })?;
            Ok(LabeledScore::new(p, correct))
        })
        .collect()
}

/// Hidden per-step reliabilities of a generated trace.
pub fn reliabilities(trace: &InferenceTrace) -> Option<Vec<f64>> {
    trace
        .extra
        .get(META_FIELD)?
        .get("rho")?
        .as_array()?
        .iter()
        .map(|v| v.as_f64())
        .collect()
}
