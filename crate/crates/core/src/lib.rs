//! Confidence scoring for multi-step LLM reasoning traces.
//!
//! The recurrent confidence chain ([`rcc`]) links consecutive reasoning steps
//! through thresholded scaled-dot-product attention ([`attention`]), turns each
//! step's token probabilities into a correlated step confidence, and folds the
//! step confidences into an exponentially weighted running estimate. Baseline
//! scorers, calibration metrics and a synthetic corpus generator sit alongside.

pub mod attention;
pub mod baselines;
pub mod engine;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod rcc;
pub mod score;
pub mod segment;
pub mod synth;
pub mod trace;

pub use attention::{
    attention_matrix, build_chain, normalize_rows, threshold_filter, AttentionPair,
};
pub use baselines::{
    score_logits_average, score_logits_final, score_self_consistency, score_verbalized, GroupBy,
};
pub use error::{Error, Result};
pub use matrix::{BinaryMatrix, Matrix};
pub use metrics::{
    ece, nll, sweep_delta, CalibrationReport, LabeledScore, ReliabilityBin, SweepRow,
};
pub use rcc::{correlated_confidence, propagate, score_rcc, ConfidenceTrajectory, RccScorer};
pub use score::{Method, Params, ScoredTrace};
pub use segment::{segment, SegmentationMode, SegmentationRule};
pub use synth::{generate, oracle_scores, SynthConfig};
pub use trace::{
    parse_trace, stream_corpus, validate_corpus, Corpus, InferenceTrace, ReasoningStep,
    TokenRecord, ValidationSummary,
};

/// Default attention threshold μ.
pub const DEFAULT_MU: f64 = 0.5;
/// Default propagation weight δ.
pub const DEFAULT_DELTA: f64 = 0.4;
