//! Least-squares fits on logarithmic axes.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in `log value`.
    pub max_residual: f64,
}

impl PowerLawFit {
    pub fn predict(&self, t: f64) -> f64 {
        (self.intercept + self.slope * t.ln()).exp()
    }
}

/// Ordinary least squares of `log value` against `log t`.
pub fn fit_power_law(series: &[(f64, f64)]) -> Result<PowerLawFit> {
    if series.len() < 5 {
        return Err(Error::DegenerateSeries(format!(
            "need at least 5 samples, got {}",
            series.len()
        )));
    }
    for w in series.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::DegenerateSeries("times must be strictly increasing".into()));
        }
    }
    if let Some(&(t, v)) = series.iter().find(|&&(t, v)| !(t > 0.0 && v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateSeries(format!(
            "non-positive sample ({t}, {v}) cannot be fitted on log axes"
        )));
    }
    let points: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let (slope, intercept) = least_squares(&points);
    let max_residual = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(PowerLawFit {
        slope,
        intercept,
        max_residual,
    })
}

/// Straight-line least squares; returns `(slope, intercept)`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Largest absolute residual of a straight-line fit, relative to the spread of `y`.
pub fn linearity_residual(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let (slope, intercept) = least_squares(points);
    let max_res = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.1), h.max(p.1)));
    let spread = (hi - lo).max(f64::MIN_POSITIVE);
    (slope, intercept, max_res / spread)
}

/// Logarithmically spaced points between `lo` and `hi` inclusive.
pub fn geometric_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|k| lo * (ratio * k as f64).exp()).collect()
}
