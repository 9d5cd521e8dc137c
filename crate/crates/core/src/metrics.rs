//! Calibration metrics: label NLL, expected calibration error, reliability
//! diagrams, and δ sweeps of the RCC scorer.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::rcc::{check_delta, RccScorer, StepConfidence};
use crate::score::{Method, Params};
use crate::segment::SegmentationRule;
use crate::trace::InferenceTrace;

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// A predicted confidence paired with its ground-truth correctness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabeledScore {
    pub confidence: f64,
    pub correct: bool,
}

impl LabeledScore {
    pub fn new(confidence: f64, correct: bool) -> Self {
        Self {
            confidence,
            correct,
        }
    }
}

/// Mean binary cross-entropy of the labels under the clamped confidences.
pub fn nll(samples: &[LabeledScore], epsilon: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(Error::Domain {
            name: "epsilon",
            value: epsilon,
            range: "(0, 1e-3]",
        });
    }
    let total = samples.iter().fold(0.0, |acc, s| {
        let p = s.confidence.clamp(epsilon, 1.0 - epsilon);
        acc - if s.correct { p.ln() } else { (1.0 - p).ln() }
    });
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

fn bin_index(confidence: f64, bins: usize) -> usize {
    let idx = (confidence * bins as f64).floor();
    if idx.is_nan() || idx < 0.0 {
        0
    } else {
        (idx as usize).min(bins - 1)
    }
}

/// Equal-width ECE over `[0, 1]` and the per-bin reliability table.
pub fn ece(samples: &[LabeledScore], bins: usize) -> Result<(f64, Vec<ReliabilityBin>)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if bins == 0 {
        return Err(Error::Domain {
            name: "bins",
            value: 0.0,
            range: ">= 1",
        });
    }
    let mut conf_sum = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    let mut counts = vec![0usize; bins];
    for s in samples {
        let b = bin_index(s.confidence, bins);
        counts[b] += 1;
        conf_sum[b] += s.confidence;
        hits[b] += usize::from(s.correct);
    }
    let n = samples.len() as f64;
    let mut total = 0.0;
    let table = (0..bins)
        .map(|b| {
            let lo = b as f64 / bins as f64;
            let hi = (b + 1) as f64 / bins as f64;
            if counts[b] == 0 {
                return ReliabilityBin {
                    lo,
                    hi,
                    count: 0,
                    mean_confidence: None,
                    accuracy: None,
                };
            }
            let c = counts[b] as f64;
            let mean_confidence = conf_sum[b] / c;
            let accuracy = hits[b] as f64 / c;
            total += (c / n) * (accuracy - mean_confidence).abs();
            ReliabilityBin {
                lo,
                hi,
                count: counts[b],
                mean_confidence: Some(mean_confidence),
                accuracy: Some(accuracy),
            }
        })
        .collect();
    Ok((total.min(1.0), table))
}

/// NLL, ECE and the reliability table for one set of scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub method: Method,
    pub params: Params,
    pub n: usize,
    pub nll: f64,
    pub ece: f64,
    pub ece_percent: f64,
    pub bins: Vec<ReliabilityBin>,
    pub epsilon: f64,
}

impl CalibrationReport {
    pub fn compute(
        method: Method,
        params: Params,
        samples: &[LabeledScore],
        bins: usize,
        epsilon: f64,
    ) -> Result<Self> {
        let nll = nll(samples, epsilon)?;
        let (ece, table) = ece(samples, bins)?;
        Ok(Self {
            method,
            params,
            n: samples.len(),
            nll,
            ece,
            ece_percent: ece * 100.0,
            bins: table,
            epsilon,
        })
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        atomic_write(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            w.write_all(b"\n")
        })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Reliability table as CSV text.
pub fn reliability_csv(bins: &[ReliabilityBin]) -> String {
    let mut out = String::from("bin_lo,bin_hi,count,mean_confidence,accuracy\n");
    for b in bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            b.lo,
            b.hi,
            b.count,
            opt(b.mean_confidence),
            opt(b.accuracy)
        );
    }
    out
}

/// SVG canvas layout for the reliability diagram.
pub mod svg {
    pub const SIZE: f64 = 400.0;
    pub const MARGIN: f64 = 40.0;
    pub const PLOT: f64 = SIZE - 2.0 * MARGIN;

    pub fn x(v: f64) -> f64 {
        MARGIN + PLOT * v
    }

    pub fn y(v: f64) -> f64 {
        SIZE - MARGIN - PLOT * v
    }

    /// Axis-aligned rectangle in SVG coordinates.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Rect {
        pub x: f64,
        pub y: f64,
        pub width: f64,
        pub height: f64,
    }
}

/// Bar geometry for one bin: spans the bin horizontally, accuracy vertically.
pub fn bar_rect(bin: &ReliabilityBin) -> Option<svg::Rect> {
    let acc = bin.accuracy?;
    Some(svg::Rect {
        x: svg::x(bin.lo),
        y: svg::y(acc),
        width: svg::x(bin.hi) - svg::x(bin.lo),
        height: svg::y(0.0) - svg::y(acc),
    })
}

/// Reliability diagram: accuracy bars, mean-confidence markers, ideal diagonal.
pub fn reliability_svg(bins: &[ReliabilityBin]) -> String {
    use svg::{x, y, SIZE};
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#
    );
    for b in bins {
        if let Some(r) = bar_rect(b) {
            let _ = writeln!(
                s,
                r##"<rect class="bar" x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="#4c72b0" stroke="#1f3a66"/>"##,
                r.x, r.y, r.width, r.height
            );
        }
        if let Some(c) = b.mean_confidence {
            let _ = writeln!(
                s,
                r##"<circle class="conf" cx="{:.4}" cy="{:.4}" r="3" fill="#dd8452"/>"##,
                x(c),
                y(c)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<line class="diagonal" x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}" stroke="gray" stroke-dasharray="4 4"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}" stroke="black"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}" stroke="black"/>"#,
        x(0.0),
        y(0.0),
        x(0.0),
        y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">confidence</text>"#,
        x(0.5),
        SIZE - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{:.1}" font-size="12" transform="rotate(-90 12 {:.1})" text-anchor="middle">accuracy</text>"#,
        y(0.5),
        y(0.5)
    );
    s.push_str("</svg>\n");
    s
}

/// Writes the reliability CSV and SVG.
pub fn emit_reliability(
    bins: &[ReliabilityBin],
    csv_path: Option<&Path>,
    svg_path: Option<&Path>,
) -> Result<()> {
    if let Some(p) = csv_path {
        let text = reliability_csv(bins);
        atomic_write(p, |w| w.write_all(text.as_bytes()))?;
    }
    if let Some(p) = svg_path {
        let text = reliability_svg(bins);
        atomic_write(p, |w| w.write_all(text.as_bytes()))?;
    }
    Ok(())
}

/// One row of a δ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub nll: f64,
    pub ece: f64,
}

/// Scores every trace with RCC at each δ and evaluates calibration.
/// Rows follow the order of `deltas`.
pub fn sweep_delta(
    traces: &[InferenceTrace],
    mu: f64,
    deltas: &[f64],
    rule: &SegmentationRule,
    bins: usize,
) -> Result<Vec<SweepRow>> {
    if deltas.is_empty() {
        return Err(Error::EmptyInput);
    }
    for &d in deltas {
        check_delta(d)?;
    }
    let labels = traces
        .iter()
        .map(|t| {
            t.correct.ok_or_else(|| Error::Unlabeled {
                trace_id: t.id.clone(),
            })
        })
        .collect::<Result<Vec<bool>>>()?;
    let base = RccScorer::new(mu, deltas[0], rule)?;
    // q_i do not depend on δ; compute them once
    let steps: Vec<Vec<StepConfidence>> = traces
        .par_iter()
        .map(|t| base.step_confidences(t).map(|(_, s)| s))
        .collect::<Result<_>>()?;
    deltas
        .par_iter()
        .map(|&delta| {
            let scorer = base.with_delta(delta)?;
            let samples = steps
                .iter()
                .zip(traces)
                .zip(&labels)
                .map(|((s, t), &correct)| {
                    scorer
                        .finish(&t.id, s)
                        .map(|st| LabeledScore::new(st.confidence, correct))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                delta,
                nll: nll(&samples, DEFAULT_EPSILON)?,
                ece: ece(&samples, bins)?.0,
            })
        })
        .collect()
}

/// Sweep table as CSV with header `delta,nll,ece_percent`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("delta,nll,ece_percent\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.delta, r.nll, r.ece * 100.0);
    }
    out
}

/// Parses a `start:stop:step` grid; `stop` is included when it lands on the
/// grid within 1e-9.
pub fn parse_delta_grid(grid: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = grid.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got `{grid}`"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number `{s}`: {e}"))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err("step must be positive and bounds finite".into());
    }
    if stop < start {
        return Err("stop must not be below start".into());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|i| {
            let v = start + i as f64 * step;
            // snap to 12 decimals so 0.1 + 2 * 0.1 prints as 0.3
            (v * 1e12).round() / 1e12
        })
        .collect())
}
