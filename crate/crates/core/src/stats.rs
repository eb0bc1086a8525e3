//! Empirical CDF and percentile estimators.

use serde::{Deserialize, Serialize};

/// Percentile `p` in [0, 100] by linear interpolation between closest ranks
/// (rank `h = (n-1) p/100`). Returns NaN for an empty sample.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * (p / 100.0).clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    /// Fraction of samples `<= value`.
    pub cdf: f64,
}

/// Empirical CDF evaluated at every distinct sample value.
pub fn ecdf(sorted: &[f64]) -> Vec<CdfPoint> {
    let n = sorted.len() as f64;
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let cdf = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.value == v => last.cdf = cdf,
            _ => out.push(CdfPoint { value: v, cdf }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

impl Percentiles {
    pub fn of_sorted(sorted: &[f64]) -> Self {
        Self {
            p5: percentile(sorted, 5.0),
            p50: percentile(sorted, 50.0),
            p95: percentile(sorted, 95.0),
        }
    }
}
