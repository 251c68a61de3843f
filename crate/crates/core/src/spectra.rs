//! Covering profiles and the dimensional functionals built on them.
//!
//! A [`CoveringProfile`] stores, for every pair of dyadic scales `k ≤ m`,
//! the largest number of depth-`m` cells of `E` inside a single level-`k`
//! window. Minkowski dimension, the upper Assouad spectrum and the
//! window-weighted growth exponent `ν♯(α)` are all least-squares slopes of
//! logarithms of these counts over a window of scales.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts;
use crate::dilation_sets::{AnalyticProfile, DilationSet};
use crate::fit::{ExponentFit, FitError};
use crate::par::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("invalid scale window [{m_min}, {m_max}] for depth {depth}")]
    Window { m_min: u32, m_max: u32, depth: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scales (k={k}, m={m}) outside 0 <= k <= m <= {depth}")]
    OutOfRange { k: u32, m: u32, depth: u32 },
}

/// Inclusive range of scales `m` entering a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub m_min: u32,
    pub m_max: u32,
}

impl ScaleWindow {
    pub fn new(m_min: u32, m_max: u32) -> Self {
        ScaleWindow { m_min, m_max }
    }

    /// Drops the coarsest quarter and the finest eighth of `0..=depth`.
    pub fn default_for(depth: u32) -> Self {
        ScaleWindow { m_min: depth / 4, m_max: depth - depth / 8 }
    }

    fn check(&self, depth: u32) -> Result<(), SpectraError> {
        if self.m_max > depth || self.m_min + 2 > self.m_max {
            return Err(SpectraError::Window { m_min: self.m_min, m_max: self.m_max, depth });
        }
        Ok(())
    }

    fn scales(&self) -> impl Iterator<Item = u32> {
        self.m_min..=self.m_max
    }
}

/// Window covering counts `counts(k, m)` for `0 ≤ k ≤ m ≤ depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringProfile {
    depth: u32,
    /// `rows[m][k]`.
    rows: Vec<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analytic: Option<AnalyticProfile>,
}

impl CoveringProfile {
    /// Exact counts from the cell list; scales are processed independently.
    pub fn compute(set: &DilationSet, exec: Exec) -> Self {
        let depth = set.depth();
        let rows = exec.map_range(depth as usize + 1, |m| window_counts(set, m as u32));
        CoveringProfile { depth, rows, analytic: set.profile().cloned() }
    }

    /// Profile from explicit rows (`rows[m]` has `m + 1` entries), e.g. for
    /// synthetic covering exponents. Counts must be at least 1.
    pub fn from_counts(rows: Vec<Vec<u64>>) -> Result<Self, SpectraError> {
        if rows.is_empty() {
            return Err(SpectraError::InvalidParameter("empty profile".into()));
        }
        for (m, row) in rows.iter().enumerate() {
            if row.len() != m + 1 || row.contains(&0) {
                return Err(SpectraError::InvalidParameter(format!(
                    "row {m} must have {} positive counts",
                    m + 1
                )));
            }
        }
        Ok(CoveringProfile { depth: rows.len() as u32 - 1, rows, analytic: None })
    }

    /// Synthetic profile `counts(k, m) = round(2^(-m ν(k/m)))`, at least 1.
    pub fn from_exponent(depth: u32, nu: impl Fn(f64) -> f64) -> Result<Self, SpectraError> {
        if depth > 40 {
            return Err(SpectraError::InvalidParameter(format!("synthetic depth {depth} > 40")));
        }
        let rows = (0..=depth)
            .map(|m| {
                (0..=m)
                    .map(|k| {
                        let theta = if m == 0 { 0.0 } else { k as f64 / m as f64 };
                        (-(m as f64) * nu(theta)).exp2().round().max(1.0) as u64
                    })
                    .collect()
            })
            .collect();
        Self::from_counts(rows)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn analytic(&self) -> Option<&AnalyticProfile> {
        self.analytic.as_ref()
    }

    pub fn count(&self, k: u32, m: u32) -> Result<u64, SpectraError> {
        if k > m || m > self.depth {
            return Err(SpectraError::OutOfRange { k, m, depth: self.depth });
        }
        Ok(self.rows[m as usize][k as usize])
    }

    /// `counts(·, m)` indexed by `k`.
    pub fn row(&self, m: u32) -> &[u64] {
        &self.rows[m as usize]
    }

    /// `N(E, 2^-m)` for `m = 0..=depth`.
    pub fn global_counts(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    /// Rows `k, m, count`.
    pub fn to_csv(&self) -> csv::Result<String> {
        artifacts::csv_string("covering_profile", |w| {
            w.write_record(["k", "m", "count"])?;
            for (m, row) in self.rows.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    w.write_record([k.to_string(), m.to_string(), c.to_string()])?;
                }
            }
            Ok(())
        })
    }
}

/// `counts(k, m)` for all `k ≤ m`, by merging sibling groups of depth-`m`
/// ancestors level by level.
fn window_counts(set: &DilationSet, m: u32) -> Vec<u64> {
    let anc = set.ancestors(m).expect("m <= depth");
    let mut row = vec![0u64; m as usize + 1];
    let mut groups: Vec<(u32, u64)> = anc.iter().map(|&a| (a, 1)).collect();
    row[m as usize] = 1;
    for k in (0..m).rev() {
        let mut merged: Vec<(u32, u64)> = Vec::with_capacity(groups.len().div_ceil(2));
        for (id, size) in groups {
            let parent = id >> 1;
            match merged.last_mut() {
                Some((p, s)) if *p == parent => *s += size,
                _ => merged.push((parent, size)),
            }
        }
        row[k as usize] = merged.iter().map(|g| g.1).max().unwrap_or(0);
        groups = merged;
    }
    row
}

pub fn covering_profile(set: &DilationSet) -> CoveringProfile {
    CoveringProfile::compute(set, Exec::default())
}

/// Slope of `log2 N(E, 2^-m)` against `m`.
pub fn minkowski_estimate(
    profile: &CoveringProfile,
    window: ScaleWindow,
) -> Result<ExponentFit, SpectraError> {
    window.check(profile.depth)?;
    let pts: Vec<(f64, f64)> = window
        .scales()
        .map(|m| (m as f64, (profile.rows[m as usize][0] as f64).log2()))
        .collect();
    Ok(ExponentFit::from_points(&pts)?)
}

/// Fixed-ratio Assouad spectrum at `φ`: slope of `log2 counts(⌊φm⌉, m)`
/// against `m - ⌊φm⌉`.
pub fn assouad_fixed_ratio(
    profile: &CoveringProfile,
    phi: f64,
    window: ScaleWindow,
) -> Result<ExponentFit, SpectraError> {
    window.check(profile.depth)?;
    if !(0.0..1.0).contains(&phi) {
        return Err(SpectraError::InvalidParameter(format!("theta {phi} outside [0,1)")));
    }
    let pts: Vec<(f64, f64)> = window
        .scales()
        .map(|m| {
            let k = (phi * m as f64).round() as u32;
            ((m - k) as f64, (profile.rows[m as usize][k as usize] as f64).log2())
        })
        .collect();
    Ok(ExponentFit::from_points(&pts)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub theta: f64,
    /// Upper spectrum: the largest fixed-ratio slope over grid values `φ ≤ θ`.
    pub estimate: f64,
    /// Fit attaining the estimate.
    pub fit: ExponentFit,
    pub argmax_phi: f64,
}

/// Upper Assouad spectrum on a grid of `θ ∈ [0,1)`. The value at the
/// largest `θ` is the quasi-Assouad estimate.
pub fn assouad_spectrum_estimate(
    profile: &CoveringProfile,
    theta_grid: &[f64],
    window: ScaleWindow,
) -> Result<Vec<SpectrumPoint>, SpectraError> {
    if theta_grid.is_empty() {
        return Err(SpectraError::InvalidParameter("empty theta grid".into()));
    }
    let mut grid = theta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let fits: Vec<ExponentFit> = grid
        .iter()
        .map(|&phi| assouad_fixed_ratio(profile, phi, window))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(grid.len());
    let mut best = 0usize;
    for (i, &theta) in grid.iter().enumerate() {
        if fits[i].slope > fits[best].slope {
            best = i;
        }
        out.push(SpectrumPoint {
            theta,
            estimate: fits[best].slope,
            fit: fits[best].clone(),
            argmax_phi: grid[best],
        });
    }
    Ok(out)
}

/// `log2 S(m) = max_k (kα + log2 counts(k, m))` with the maximizing `k`
/// (smallest on ties).
pub fn nu_sharp_log_s(profile: &CoveringProfile, alpha: f64, m: u32) -> (f64, u32) {
    let row = &profile.rows[m as usize];
    let mut best = (f64::NEG_INFINITY, 0u32);
    for (k, &c) in row.iter().enumerate() {
        let v = k as f64 * alpha + (c as f64).log2();
        if v > best.0 {
            best = (v, k as u32);
        }
    }
    best
}

/// Slope of `log2 S(m)` against `m`: the finite-scale `ν♯(α)`.
pub fn nu_sharp_estimate(
    profile: &CoveringProfile,
    alpha: f64,
    window: ScaleWindow,
) -> Result<ExponentFit, SpectraError> {
    window.check(profile.depth)?;
    if !alpha.is_finite() {
        return Err(SpectraError::InvalidParameter("alpha must be finite".into()));
    }
    let pts: Vec<(f64, f64)> = window
        .scales()
        .map(|m| (m as f64, nu_sharp_log_s(profile, alpha, m).0))
        .collect();
    Ok(ExponentFit::from_points(&pts)?)
}

/// `max_θ (αθ - ν(θ))` over a sampled covering exponent `ν`.
pub fn legendre_nu_sharp(nu_profile: &[(f64, f64)], alpha: f64) -> Result<f64, SpectraError> {
    if nu_profile.is_empty() {
        return Err(SpectraError::InvalidParameter("empty nu profile".into()));
    }
    Ok(nu_profile
        .iter()
        .map(|&(theta, nu)| alpha * theta - nu)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Upper bound `max(α, (1 - β/γ)α + β)`; for `β = 0` the ratio is taken as 0.
pub fn nu_sharp_upper_bound(beta: f64, gamma: f64, alpha: f64) -> f64 {
    let ratio = if beta == 0.0 { 0.0 } else { beta / gamma };
    alpha.max((1.0 - ratio) * alpha + beta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracpropRow {
    pub alpha: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracpropReport {
    pub beta: f64,
    pub gamma: f64,
    pub slack: f64,
    pub rows: Vec<FracpropRow>,
    pub all_pass: bool,
}

/// Checks `α - slack ≤ ν̂♯(α) ≤ max(α, (1-β/γ)α+β) + slack` on a grid.
pub fn fracprop_check(
    profile: &CoveringProfile,
    beta: f64,
    gamma: f64,
    alpha_grid: &[f64],
    slack: f64,
    window: ScaleWindow,
) -> Result<FracpropReport, SpectraError> {
    if !(0.0..=1.0).contains(&beta) || !(beta..=1.0).contains(&gamma) || (gamma == 0.0 && beta > 0.0)
    {
        return Err(SpectraError::InvalidParameter(format!(
            "need 0 <= beta <= gamma <= 1, got beta={beta}, gamma={gamma}"
        )));
    }
    if alpha_grid.iter().any(|a| *a < 0.0) {
        return Err(SpectraError::InvalidParameter("alphas must be >= 0".into()));
    }
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let estimate = nu_sharp_estimate(profile, alpha, window)?.slope;
        let upper = nu_sharp_upper_bound(beta, gamma, alpha);
        let pass = alpha - slack <= estimate && estimate <= upper + slack;
        rows.push(FracpropRow { alpha, estimate, lower: alpha, upper, pass });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(FracpropReport { beta, gamma, slack, rows, all_pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointDiagnostics {
    /// First scale of every sequence (scale 0 carries no logarithm).
    pub m_start: u32,
    pub delta_beta_n: Vec<f64>,
    pub log_weighted: Vec<f64>,
    pub neighborhood_measure: Vec<f64>,
    pub delta_beta_n_appears_bounded: bool,
    pub log_weighted_appears_bounded: bool,
}

/// Advisory boundedness test: the finer half of the sequence stays within a
/// factor 4 of the median and shows no power growth in `m` beyond 1/4.
pub fn appears_bounded(values: &[f64]) -> bool {
    if values.is_empty() {
        return true;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let max = *sorted.last().unwrap();
    if max > 4.0 * median {
        return false;
    }
    let half = values.len() / 2;
    let tail: Vec<(f64, f64)> = values[half..]
        .iter()
        .enumerate()
        .map(|(i, v)| (((half + i + 1) as f64).log2(), v.log2()))
        .collect();
    match ExponentFit::from_points(&tail) {
        Ok(f) => f.slope <= 0.25,
        Err(_) => true,
    }
}

/// Sequences behind the endpoint conditions, over `m = 1..=depth`.
pub fn endpoint_diagnostics(
    profile: &CoveringProfile,
    beta: f64,
    q: f64,
    d: u32,
) -> Result<EndpointDiagnostics, SpectraError> {
    if !(0.0..=1.0).contains(&beta) || q < 1.0 || d < 2 {
        return Err(SpectraError::InvalidParameter(format!(
            "need beta in [0,1], q >= 1, d >= 2; got beta={beta}, q={q}, d={d}"
        )));
    }
    let mut delta_beta_n = Vec::new();
    let mut log_weighted = Vec::new();
    let mut neighborhood_measure = Vec::new();
    for m in 1..=profile.depth {
        let n = profile.rows[m as usize][0] as f64;
        let mf = m as f64;
        delta_beta_n.push((-mf * beta).exp2() * n);
        log_weighted.push((-mf).exp2() * (mf * std::f64::consts::LN_2).powf(q / d as f64) * n);
        neighborhood_measure.push(n * (-mf).exp2());
    }
    Ok(EndpointDiagnostics {
        m_start: 1,
        delta_beta_n_appears_bounded: appears_bounded(&delta_beta_n),
        log_weighted_appears_bounded: appears_bounded(&log_weighted),
        delta_beta_n,
        log_weighted,
        neighborhood_measure,
    })
}

/// `2^(-k(2/q - 1/p)) counts(k, k+m)^(1/q)`.
pub fn omega_mpq(
    profile: &CoveringProfile,
    p: f64,
    q: f64,
    m: u32,
    k: u32,
) -> Result<f64, SpectraError> {
    if !(p > 1.0 && p <= q && q.is_finite()) {
        return Err(SpectraError::InvalidParameter(format!(
            "need 1 < p <= q < inf, got p={p}, q={q}"
        )));
    }
    let c = profile.count(k, k + m)? as f64;
    Ok((-(k as f64) * (2.0 / q - 1.0 / p)).exp2() * c.powf(1.0 / q))
}

/// Rows `<label>, slope, intercept, r_squared, m_min, m_max`.
pub fn fits_to_csv(label: &str, fits: &[(f64, ExponentFit)]) -> csv::Result<String> {
    artifacts::csv_string("fits", |w| {
        w.write_record([label, "slope", "intercept", "r_squared", "m_min", "m_max"])?;
        for (x, f) in fits {
            w.write_record([
                x.to_string(),
                f.slope.to_string(),
                f.intercept.to_string(),
                f.r_squared.to_string(),
                f.scale_window.0.to_string(),
                f.scale_window.1.to_string(),
            ])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation_sets::Generator;
    use crate::numeric::Number;

    fn set(g: Generator, n: u32) -> DilationSet {
        DilationSet::generate(&g, n).unwrap()
    }

    fn full(n: u32) -> CoveringProfile {
        covering_profile(&set(Generator::FullInterval {}, n))
    }

    fn point(n: u32) -> CoveringProfile {
        covering_profile(&set(Generator::FinitePoints { points: vec![1.0] }, n))
    }

    #[test]
    fn full_interval_counts_are_powers() {
        let p = full(4);
        for m in 0..=4 {
            for k in 0..=m {
                assert_eq!(p.count(k, m).unwrap(), 1 << (m - k));
            }
        }
    }

    #[test]
    fn point_counts_are_one() {
        let p = point(4);
        for m in 0..=4 {
            assert!(p.row(m).iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn count_range_checked() {
        let p = point(4);
        assert!(p.count(3, 2).is_err());
        assert!(p.count(0, 5).is_err());
    }

    #[test]
    fn minkowski_trivial_slopes() {
        let f = minkowski_estimate(&full(16), ScaleWindow::new(4, 16)).unwrap();
        assert_eq!(f.slope, 1.0);
        let f = minkowski_estimate(&point(16), ScaleWindow::new(4, 16)).unwrap();
        assert_eq!(f.slope, 0.0);
    }

    #[test]
    fn window_validation() {
        let p = full(6);
        assert!(minkowski_estimate(&p, ScaleWindow::new(4, 5)).is_err());
        assert!(minkowski_estimate(&p, ScaleWindow::new(2, 7)).is_err());
        assert_eq!(ScaleWindow::default_for(16), ScaleWindow::new(4, 14));
    }

    #[test]
    fn spectrum_trivial() {
        let grid = [0.0, 0.25, 0.5, 0.75];
        for pt in assouad_spectrum_estimate(&full(16), &grid, ScaleWindow::new(4, 16)).unwrap() {
            assert!((pt.estimate - 1.0).abs() < 1e-12, "{pt:?}");
        }
        for pt in assouad_spectrum_estimate(&point(16), &grid, ScaleWindow::new(4, 16)).unwrap() {
            assert_eq!(pt.estimate, 0.0);
        }
    }

    #[test]
    fn nu_sharp_full_and_point() {
        let p = full(20);
        let w = ScaleWindow::default_for(20);
        for alpha in [0.0, 0.5, 1.0, 1.5, 2.0] {
            let f = nu_sharp_estimate(&p, alpha, w).unwrap();
            assert!((f.slope - f64::max(1.0, alpha)).abs() < 1e-9, "{alpha} {f:?}");
        }
        let f = nu_sharp_estimate(&point(20), 0.7, w).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-12);
    }

    #[test]
    fn nu_sharp_ties_take_smallest_k() {
        // Full interval, alpha = 1: every k gives m.
        let (v, k) = nu_sharp_log_s(&full(8), 1.0, 8);
        assert_eq!((v, k), (8.0, 0));
    }

    #[test]
    fn legendre_examples() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let full_nu: Vec<(f64, f64)> = grid.iter().map(|&t| (t, t - 1.0)).collect();
        assert!((legendre_nu_sharp(&full_nu, 2.0).unwrap() - 2.0).abs() < 1e-12);
        let pt: Vec<(f64, f64)> = grid.iter().map(|&t| (t, 0.0)).collect();
        assert!((legendre_nu_sharp(&pt, 0.7).unwrap() - 0.7).abs() < 1e-12);
        let reg: Vec<(f64, f64)> =
            grid.iter().map(|&t| (t, -f64::min(1.0 - t, 0.5))).collect();
        assert!((legendre_nu_sharp(&reg, 0.5).unwrap() - 0.75).abs() < 1e-12);
        assert!(legendre_nu_sharp(&[], 1.0).is_err());
    }

    #[test]
    fn fracprop_full_interval() {
        let r = fracprop_check(&full(20), 1.0, 1.0, &[2.0], 0.05, ScaleWindow::default_for(20))
            .unwrap();
        assert!(r.all_pass);
        assert_eq!(r.rows[0].upper, 2.0);
    }

    #[test]
    fn endpoint_full_interval() {
        let d = endpoint_diagnostics(&full(20), 1.0, 2.0, 2).unwrap();
        assert!(d.delta_beta_n.iter().all(|&v| v == 1.0));
        assert!(d.delta_beta_n_appears_bounded);
        for (i, v) in d.log_weighted.iter().enumerate() {
            let m = (i + 1) as f64;
            assert!((v - m * std::f64::consts::LN_2).abs() < 1e-12);
        }
        assert!(!d.log_weighted_appears_bounded);
    }

    #[test]
    fn endpoint_cantor_ternary_aligned() {
        let beta = 2f64.ln() / 3f64.ln();
        let e = set(Generator::cantor_middle_thirds(), 20);
        let d = endpoint_diagnostics(&covering_profile(&e), beta, 2.0, 3).unwrap();
        for v in &d.delta_beta_n {
            assert!(*v > 0.25 && *v < 4.0, "{v}");
        }
        assert!(d.delta_beta_n_appears_bounded);
        // At a ternary scale 3^-j the count is exactly 2^j.
        for j in 1..12 {
            assert!((3f64.powi(-j).powf(beta) * 2f64.powi(j) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_examples() {
        let v = omega_mpq(&full(8), 2.0, 2.0, 3, 2).unwrap();
        assert!((v - 0.5f64.exp2()).abs() < 1e-12);
        let v = omega_mpq(&point(8), 2.0, 4.0, 5, 3).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(omega_mpq(&point(8), 2.0, 4.0, 6, 3).is_err());
        assert!(omega_mpq(&point(8), 1.0, 4.0, 1, 1).is_err());
    }

    #[test]
    fn csv_layouts() {
        let s = point(1).to_csv().unwrap();
        assert_eq!(s, "# schema=radmax.covering_profile.v1\nk,m,count\n0,0,1\n0,1,1\n1,1,1\n");
        let f = ExponentFit::from_points(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
        let s = fits_to_csv("alpha", &[(0.5, f)]).unwrap();
        assert!(s.ends_with("alpha,slope,intercept,r_squared,m_min,m_max\n0.5,1,0,1,0,2\n"));
    }

    #[test]
    fn profile_json_round_trip() {
        let e = set(Generator::ConvexSequence { beta: Number::ratio(1, 2) }, 8);
        let p = covering_profile(&e);
        let s = serde_json::to_string(&p).unwrap();
        let back: CoveringProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
