//! Trace-parallel batch scoring with ordered output.
//!
//! Traces are read in fixed-size chunks, each chunk is scored on a rayon pool,
//! and results are written in input order. Per-trace scoring is sequential and
//! pure, so the output bytes do not depend on the thread count.

use std::io::{BufRead, Write};
use std::sync::mpsc;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::baselines::{score_logits_average, score_logits_final, score_verbalized};
use crate::error::{Error, Result};
use crate::rcc::{RccScorer, RccTrace};
use crate::score::{Method, ScoredTrace};
use crate::trace::{Corpus, InferenceTrace};

pub const DEFAULT_CHUNK: usize = 1024;

/// A scorer that needs only one trace at a time.
#[derive(Debug, Clone)]
pub enum TraceScorer {
    Rcc(RccScorer),
    LogitsFinal,
    LogitsAverage,
    Verbalized,
}

impl TraceScorer {
    pub fn method(&self) -> Method {
        match self {
            TraceScorer::Rcc(_) => Method::Rcc,
            TraceScorer::LogitsFinal => Method::LogitsFinal,
            TraceScorer::LogitsAverage => Method::LogitsAverage,
            TraceScorer::Verbalized => Method::Verbalized,
        }
    }

    pub fn score(&self, trace: &InferenceTrace) -> Result<ScoredTrace> {
        match self {
            TraceScorer::Rcc(s) => s.score(trace),
            TraceScorer::LogitsFinal => Ok(score_logits_final(trace)),
            TraceScorer::LogitsAverage => Ok(score_logits_average(trace)),
            TraceScorer::Verbalized => score_verbalized(trace),
        }
    }
}

/// Builds a pool with `threads` workers (0 = rayon's default).
pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Scores a slice in parallel; output order equals input order.
pub fn score_all(
    pool: &ThreadPool,
    scorer: &TraceScorer,
    traces: &[InferenceTrace],
) -> Result<Vec<ScoredTrace>> {
    pool.install(|| traces.par_iter().map(|t| scorer.score(t)).collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamStats {
    pub traces: usize,
    pub fallback_steps: usize,
}

/// Optional per-trace hook receiving the RCC intermediates (attention dump).
pub type ExplainSink<'a> = &'a mut dyn FnMut(&InferenceTrace, &RccTrace) -> Result<()>;

/// Streams `corpus` through `scorer`, writing one JSON line per trace.
///
/// With `stable_order` the output follows input order; otherwise lines are
/// written as workers finish, in whatever order that is.
pub fn score_stream<R: BufRead, W: Write>(
    corpus: Corpus<R>,
    scorer: &TraceScorer,
    pool: &ThreadPool,
    chunk_size: usize,
    stable_order: bool,
    out: &mut W,
    mut explain: Option<ExplainSink<'_>>,
) -> Result<StreamStats> {
    let path = corpus.source_path().to_path_buf();
    let mut stats = StreamStats::default();
    let mut corpus = corpus.peekable();
    let chunk_size = chunk_size.max(1);
    let io_err = |e: std::io::Error| Error::io(&path, e);
    loop {
        let mut chunk = Vec::with_capacity(chunk_size);
        while chunk.len() < chunk_size {
            match corpus.next() {
                Some(item) => chunk.push(item?),
                None => break,
            }
        }
        if chunk.is_empty() {
            break;
        }
        if let (Some(sink), TraceScorer::Rcc(rcc)) = (explain.as_mut(), scorer) {
            let explained: Vec<RccTrace> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|t| rcc.explain(t))
                    .collect::<Result<_>>()
            })?;
            for (t, e) in chunk.iter().zip(&explained) {
                sink(t, e)?;
            }
        }
        if stable_order {
            for s in score_all(pool, scorer, &chunk)? {
                record(&mut stats, &s);
                serde_json::to_writer(&mut *out, &s).map_err(|e| io_err(e.into()))?;
                out.write_all(b"\n").map_err(io_err)?;
            }
        } else {
            let (tx, rx) = mpsc::channel();
            pool.scope(|scope| {
                for t in &chunk {
                    let tx = tx.clone();
                    scope.spawn(move |_| {
                        let _ = tx.send(scorer.score(t));
                    });
                }
            });
            drop(tx);
            for s in rx {
                let s = s?;
                record(&mut stats, &s);
                serde_json::to_writer(&mut *out, &s).map_err(|e| io_err(e.into()))?;
                out.write_all(b"\n").map_err(io_err)?;
            }
        }
    }
    Ok(stats)
}

fn record(stats: &mut StreamStats, s: &ScoredTrace) {
    stats.traces += 1;
    if let Some(d) = s.diagnostics {
        stats.fallback_steps += d.fallback_steps;
    }
}
