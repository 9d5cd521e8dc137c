//! Reference implementations written directly from the definitions, kept
//! deliberately naive (no shared code with the library).
#![allow(dead_code)]

use std::path::PathBuf;

/// Closed form of the recurrence:
/// `p_n = (1-δ)^(n-1) q_1 + Σ_{i=2..n} δ (1-δ)^(n-i) q_i`.
pub fn unrolled_final(q: &[f64], delta: f64) -> f64 {
    let n = q.len();
    let mut total = (1.0 - delta).powi(n as i32 - 1) * q[0];
    for (i, &qi) in q.iter().enumerate().skip(1) {
        total += delta * (1.0 - delta).powi((n - 1 - i) as i32) * qi;
    }
    total
}

/// Double-loop recomputation of the correlated confidence.
#[allow(clippy::needless_range_loop)]
pub fn brute_q(w: &[Vec<u8>], c: &[f64]) -> f64 {
    let mut sum_rows = 0.0;
    let mut rows = 0.0;
    for row in w {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..c.len() {
            if row[k] == 1 {
                num += c[k];
                den += 1.0;
            }
        }
        if den > 0.0 {
            sum_rows += num / den;
            rows += 1.0;
        }
    }
    if rows > 0.0 {
        sum_rows / rows
    } else {
        c.iter().sum::<f64>() / c.len() as f64
    }
}

pub fn brute_raw(prev: &[Vec<f64>], next: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let scale = (d as f64).sqrt();
    prev.iter()
        .map(|a| {
            next.iter()
                .map(|b| (0..d).map(|i| a[i] * b[i]).sum::<f64>() / scale)
                .collect()
        })
        .collect()
}

pub fn brute_softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

pub fn brute_filter(row: &[f64], mu: f64) -> Vec<u8> {
    row.iter().map(|&x| u8::from(x - mu >= 0.0)).collect()
}

pub fn brute_nll(samples: &[(f64, bool)], eps: f64) -> f64 {
    let mut total = 0.0;
    for &(p, y) in samples {
        let p = p.max(eps).min(1.0 - eps);
        total += if y { -p.ln() } else { -(1.0 - p).ln() };
    }
    total / samples.len() as f64
}

pub fn brute_ece(samples: &[(f64, bool)], bins: usize) -> f64 {
    let mut count = vec![0usize; bins];
    let mut conf = vec![0.0; bins];
    let mut hits = vec![0.0; bins];
    for &(c, y) in samples {
        let mut b = (c * bins as f64).floor() as usize;
        if b >= bins {
            b = bins - 1;
        }
        count[b] += 1;
        conf[b] += c;
        hits[b] += if y { 1.0 } else { 0.0 };
    }
    let n = samples.len() as f64;
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let m = count[b] as f64;
            (m / n) * (hits[b] / m - conf[b] / m).abs()
        })
        .sum()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

/// Set `CONFCHAIN_BLESS=1` to (re)write golden files instead of comparing.
pub fn blessing() -> bool {
    std::env::var_os("CONFCHAIN_BLESS").is_some()
}
