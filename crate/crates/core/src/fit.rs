//! Least-squares log-log fits. Every limsup exponent in the crate is
//! estimated as the slope of such a fit over a finite window of scales.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points for a fit, got {0}")]
    TooFewPoints(usize),
    #[error("abscissae are degenerate (all equal)")]
    DegenerateAbscissae,
    #[error("non-finite value in fit input")]
    NonFinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Inclusive range of scale indices the fit used.
    pub scale_window: (i64, i64),
}

impl ExponentFit {
    /// Ordinary least squares through `(x, y)` points.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, FitError> {
        let n = points.len();
        if n < 3 {
            return Err(FitError::TooFewPoints(n));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(FitError::NonFinite);
        }
        let nf = n as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
        let xspan = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1.0);
        if sxx <= 1e-24 * xspan * xspan * nf {
            return Err(FitError::DegenerateAbscissae);
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss_res: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let r_squared = if syy <= f64::EPSILON * (1.0 + my * my) * nf {
            1.0
        } else {
            (1.0 - ss_res / syy).clamp(0.0, 1.0)
        };
        let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        Ok(ExponentFit {
            slope,
            intercept,
            r_squared,
            scale_window: (lo.floor() as i64, hi.ceil() as i64),
        })
    }

    /// Fit of `values[i]` against the integer scales `m_min..=m_max`.
    pub fn over_scales(m_min: usize, values: &[f64]) -> Result<Self, FitError> {
        let pts: Vec<(f64, f64)> = values
            .iter()
            .enumerate()
            .map(|(i, &y)| ((m_min + i) as f64, y))
            .collect();
        Self::from_points(&pts)
    }
}
