//! Spherical averages of radial functions.
//!
//! For `f(x) = f0(|x|)` and `|x| = r > 0`,
//! `A_t f(x) = c_d ∫_{|r-t|}^{r+t} K_t(r,s) f0(s) ds` with
//! `K_t(r,s) = (√((r+t)²-s²) √(s²-(r-t)²) / D)^(d-3) · s / D`,
//! `D = (r+t)² - (r-t)² = 4rt`. The constant `c_d` is calibrated so that
//! averages of the constant function equal 1.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Exec;
use crate::quadrature::{
    integrate, integrate_endpoint_singular, QuadratureError, QuadratureResult,
    DEFAULT_MAX_SUBDIVISIONS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadialError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("s = {s} outside the open interval ({lo}, {hi})")]
    Domain { s: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

fn invalid(msg: impl Into<String>) -> RadialError {
    RadialError::InvalidParameter(msg.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub a: f64,
    pub b: f64,
    pub height: f64,
}

/// Profile `f0` of a radial function; JSON `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum RadialFunction {
    /// `1_[a,b]`.
    IndicatorInterval { a: f64, b: f64 },
    /// `s^exponent (ln 1/s)^log_exponent` on `[a,b]`.
    PowerLog { exponent: f64, log_exponent: f64, a: f64, b: f64 },
    /// `Σ height_i 1_[a_i,b_i]` over disjoint, increasing intervals.
    StepTrain { pieces: Vec<Step> },
    /// `exp(1 - 1/(1-x²))` with `x = (s - center)/width`, peak value 1.
    SmoothBump { center: f64, width: f64 },
    /// `factor · inner`.
    Scaled { factor: f64, inner: Box<RadialFunction> },
}

impl RadialFunction {
    pub fn indicator(a: f64, b: f64) -> Self {
        RadialFunction::IndicatorInterval { a, b }
    }

    pub fn scaled(self, factor: f64) -> Self {
        RadialFunction::Scaled { factor, inner: Box::new(self) }
    }

    pub fn validate(&self) -> Result<(), RadialError> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            RadialFunction::IndicatorInterval { a, b } => {
                if !finite(&[*a, *b]) || *a < 0.0 || a >= b {
                    return Err(invalid(format!("indicator needs 0 <= a < b, got [{a}, {b}]")));
                }
            }
            RadialFunction::PowerLog { exponent, log_exponent, a, b } => {
                if !finite(&[*exponent, *log_exponent, *a, *b]) || *a <= 0.0 || a >= b {
                    return Err(invalid(format!("power_log needs 0 < a < b, got [{a}, {b}]")));
                }
                if *log_exponent != 0.0 && *b >= 1.0 {
                    return Err(invalid("power_log with a log factor needs b < 1"));
                }
            }
            RadialFunction::StepTrain { pieces } => {
                if pieces.is_empty() {
                    return Err(invalid("step_train needs at least one piece"));
                }
                for (i, p) in pieces.iter().enumerate() {
                    if !finite(&[p.a, p.b, p.height]) || p.a < 0.0 || p.a >= p.b {
                        return Err(invalid(format!("step {i} has invalid interval")));
                    }
                    if i > 0 && pieces[i - 1].b > p.a {
                        return Err(invalid("step_train pieces must be disjoint and increasing"));
                    }
                }
            }
            RadialFunction::SmoothBump { center, width } => {
                if !finite(&[*center, *width]) || *width <= 0.0 || center - width < 0.0 {
                    return Err(invalid("smooth_bump needs width > 0 and center >= width"));
                }
            }
            RadialFunction::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return Err(invalid("scale factor must be finite"));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            RadialFunction::IndicatorInterval { a, b } => {
                if (*a..=*b).contains(&s) {
                    1.0
                } else {
                    0.0
                }
            }
            RadialFunction::PowerLog { exponent, log_exponent, a, b } => {
                if !(*a..=*b).contains(&s) {
                    return 0.0;
                }
                let mut v = s.powf(*exponent);
                if *log_exponent != 0.0 {
                    v *= (-s.ln()).powf(*log_exponent);
                }
                v
            }
            RadialFunction::StepTrain { pieces } => {
                let i = pieces.partition_point(|p| p.b < s);
                match pieces.get(i) {
                    Some(p) if p.a <= s => p.height,
                    _ => 0.0,
                }
            }
            RadialFunction::SmoothBump { center, width } => {
                let x = (s - center) / width;
                if x.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                }
            }
            RadialFunction::Scaled { factor, inner } => factor * inner.eval(s),
        }
    }

    /// Closed interval outside which `f0` vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            RadialFunction::IndicatorInterval { a, b } | RadialFunction::PowerLog { a, b, .. } => {
                (*a, *b)
            }
            RadialFunction::StepTrain { pieces } => (pieces[0].a, pieces[pieces.len() - 1].b),
            RadialFunction::SmoothBump { center, width } => (center - width, center + width),
            RadialFunction::Scaled { inner, .. } => inner.support(),
        }
    }

    /// Points where `f0` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialFunction::StepTrain { pieces } => {
                pieces.iter().flat_map(|p| [p.a, p.b]).collect()
            }
            RadialFunction::SmoothBump { center, width } => {
                vec![center - width, *center, center + width]
            }
            RadialFunction::Scaled { inner, .. } => inner.breakpoints(),
            _ => {
                let (a, b) = self.support();
                vec![a, b]
            }
        }
    }

    /// Breakpoints strictly inside `(lo, hi)`.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            RadialFunction::StepTrain { pieces } => {
                let start = pieces.partition_point(|p| p.b <= lo);
                let mut out = Vec::new();
                for p in &pieces[start..] {
                    if p.a >= hi {
                        break;
                    }
                    out.extend([p.a, p.b].into_iter().filter(|&c| c > lo && c < hi));
                }
                out
            }
            RadialFunction::Scaled { inner, .. } => inner.breakpoints_in(lo, hi),
            _ => self.breakpoints().into_iter().filter(|&c| c > lo && c < hi).collect(),
        }
    }

    /// `∫_lo^hi f0(s) ds`, in closed form where available.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64, RadialError> {
        if hi <= lo {
            return Ok(0.0);
        }
        let overlap = |a: f64, b: f64| (hi.min(b) - lo.max(a)).max(0.0);
        match self {
            RadialFunction::IndicatorInterval { a, b } => Ok(overlap(*a, *b)),
            RadialFunction::StepTrain { pieces } => {
                let start = pieces.partition_point(|p| p.b <= lo);
                Ok(pieces[start..]
                    .iter()
                    .take_while(|p| p.a < hi)
                    .map(|p| p.height * overlap(p.a, p.b))
                    .sum())
            }
            RadialFunction::PowerLog { exponent, log_exponent: l, a, b } if *l == 0.0 => {
                let (x, y) = (lo.max(*a), hi.min(*b));
                if y <= x {
                    return Ok(0.0);
                }
                Ok(if (*exponent + 1.0).abs() < 1e-15 {
                    (y / x).ln()
                } else {
                    (y.powf(exponent + 1.0) - x.powf(exponent + 1.0)) / (exponent + 1.0)
                })
            }
            RadialFunction::Scaled { factor, inner } => Ok(factor * inner.integral(lo, hi)?),
            _ => {
                let (a, b) = self.support();
                let (x, y) = (lo.max(a), hi.min(b));
                if y <= x {
                    return Ok(0.0);
                }
                let r = integrate(
                    |s| self.eval(s),
                    x,
                    y,
                    &self.breakpoints_in(x, y),
                    1e-13 * (1.0 + y - x),
                    DEFAULT_MAX_SUBDIVISIONS,
                )?;
                Ok(r.value)
            }
        }
    }

    /// `∫ |f0(s)|^p s^(d-1) ds`.
    pub fn norm_pow(&self, p: f64, d: u32) -> Result<f64, RadialError> {
        if !(p >= 1.0 && p.is_finite()) || d < 1 {
            return Err(invalid(format!("norm needs p in [1, inf) and d >= 1, got p={p}")));
        }
        let dd = d as f64;
        let shell = |a: f64, b: f64| (b.powf(dd) - a.powf(dd)) / dd;
        match self {
            RadialFunction::IndicatorInterval { a, b } => Ok(shell(*a, *b)),
            RadialFunction::StepTrain { pieces } => {
                Ok(pieces.iter().map(|s| s.height.abs().powf(p) * shell(s.a, s.b)).sum())
            }
            RadialFunction::PowerLog { exponent, log_exponent, a, b } => {
                let k = exponent * p + dd - 1.0;
                let m = log_exponent * p;
                if m == 0.0 {
                    return Ok(if (k + 1.0).abs() < 1e-12 {
                        (b / a).ln()
                    } else {
                        (b.powf(k + 1.0) - a.powf(k + 1.0)) / (k + 1.0)
                    });
                }
                if (k + 1.0).abs() < 1e-12 {
                    // u = ln(1/s): ∫ u^m du between ln(1/b) and ln(1/a).
                    let (u0, u1) = (-b.ln(), -a.ln());
                    return Ok(if (m + 1.0).abs() < 1e-12 {
                        (u1 / u0).ln()
                    } else {
                        (u1.powf(m + 1.0) - u0.powf(m + 1.0)) / (m + 1.0)
                    });
                }
                self.numeric_norm_pow(p, d)
            }
            RadialFunction::Scaled { factor, inner } => {
                Ok(factor.abs().powf(p) * inner.norm_pow(p, d)?)
            }
            RadialFunction::SmoothBump { .. } => self.numeric_norm_pow(p, d),
        }
    }

    fn numeric_norm_pow(&self, p: f64, d: u32) -> Result<f64, RadialError> {
        let (a, b) = self.support();
        let r = integrate(
            |s| self.eval(s).abs().powf(p) * s.powi(d as i32 - 1),
            a,
            b,
            &self.breakpoints_in(a, b),
            1e-12,
            DEFAULT_MAX_SUBDIVISIONS,
        )?;
        Ok(r.value)
    }

    /// `‖f0‖_{L^p(s^(d-1) ds)}`.
    pub fn weighted_norm(&self, p: f64, d: u32) -> Result<f64, RadialError> {
        Ok(self.norm_pow(p, d)?.powf(1.0 / p))
    }
}

/// `K_t(r,s)` with the distances `s - |r-t|` and `r + t - s` supplied.
pub(crate) fn kernel_parts(d: u32, r: f64, t: f64, s: f64, sa: f64, bs: f64) -> f64 {
    let a = (r - t).abs();
    let b = r + t;
    let dd = 4.0 * r * t;
    let lin = s / dd;
    match d {
        3 => lin,
        2 => s / (bs * (b + s) * sa * (s + a)).sqrt(),
        _ => ((bs * (b + s) * sa * (s + a)).sqrt() / dd).powi(d as i32 - 3) * lin,
    }
}

/// `K_t(r,s)` for `|r-t| < s < r+t`.
pub fn kernel(d: u32, t: f64, r: f64, s: f64) -> Result<f64, RadialError> {
    if d < 2 {
        return Err(invalid(format!("dimension {d} < 2")));
    }
    if !(r > 0.0 && t > 0.0) {
        return Err(invalid("kernel needs r > 0 and t > 0"));
    }
    let (lo, hi) = ((r - t).abs(), r + t);
    if !(s > lo && s < hi) {
        return Err(RadialError::Domain { s, lo, hi });
    }
    Ok(kernel_parts(d, r, t, s, s - lo, hi - s))
}

const CACHED_DIMS: usize = 33;
static NORMALIZATION: [OnceLock<f64>; CACHED_DIMS] = [const { OnceLock::new() }; CACHED_DIMS];

fn calibrate(d: u32) -> f64 {
    let r = integrate_endpoint_singular(
        |s, sa, bs| kernel_parts(d, 1.0, 1.0, s, sa, bs),
        0.0,
        2.0,
        &[],
        1e-14,
        DEFAULT_MAX_SUBDIVISIONS,
    )
    .expect("calibration integral converges");
    1.0 / r.value
}

/// `c_d = 1 / ∫ K_1(1,s) ds`, computed once per dimension.
pub fn normalization_constant(d: u32) -> f64 {
    match NORMALIZATION.get(d as usize) {
        Some(cell) => *cell.get_or_init(|| calibrate(d)),
        None => calibrate(d),
    }
}

fn check_average_args(d: u32, r: f64, t: f64) -> Result<(), RadialError> {
    if d < 2 {
        return Err(invalid(format!("dimension {d} < 2")));
    }
    if !(r >= 0.0 && r.is_finite()) || !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("need r >= 0 and t > 0, got r={r}, t={t}")));
    }
    Ok(())
}

/// `A_t f` at `|x| = r`, to absolute tolerance `tol`.
pub fn sphere_average(
    f: &RadialFunction,
    d: u32,
    r: f64,
    t: f64,
    tol: f64,
) -> Result<QuadratureResult, RadialError> {
    check_average_args(d, r, t)?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if r == 0.0 {
        return Ok(QuadratureResult { value: f.eval(t), abs_error_estimate: 0.0, evaluations: 1 });
    }
    let (a, b) = ((r - t).abs(), r + t);
    let (lo, hi) = f.support();
    if hi < a || lo > b {
        return Ok(QuadratureResult::zero());
    }
    let cd = normalization_constant(d);
    let res = integrate_endpoint_singular(
        |s, sa, bs| kernel_parts(d, r, t, s, sa, bs) * f.eval(s),
        a,
        b,
        &f.breakpoints_in(a, b),
        tol / cd,
        DEFAULT_MAX_SUBDIVISIONS,
    );
    match res {
        Ok(q) => Ok(q.scaled(cd)),
        Err(QuadratureError::NotConverged { best, err, evaluations }) => {
            Err(RadialError::Quadrature(QuadratureError::NotConverged {
                best: cd * best,
                err: cd * err,
                evaluations,
            }))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

const MC_CHUNK: usize = 8192;

/// Mean of `f0(|x - t y|)` over uniform `y ∈ S^(d-1)`, `x = (r, 0, ..., 0)`.
///
/// Chunk `i` draws from its own ChaCha stream (seed, stream `i`), so the
/// result depends only on `seed` and `samples`.
pub fn sphere_average_mc(
    f: &RadialFunction,
    d: u32,
    r: f64,
    t: f64,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<MonteCarloEstimate, RadialError> {
    check_average_args(d, r, t)?;
    if samples < 1000 {
        return Err(invalid(format!("need at least 1000 samples, got {samples}")));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial = exec.map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let n = MC_CHUNK.min(samples - c * MC_CHUNK);
        let mut z = vec![0.0f64; d as usize];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cos = z[0] / norm;
            let s = (r * r + t * t - 2.0 * r * t * cos).max(0.0).sqrt();
            let v = f.eval(s);
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(MonteCarloEstimate { mean, std_error: (var / n).sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn kernel_examples() {
        let k = kernel(3, 1.3, 0.7, 1.0).unwrap();
        assert!((k - 1.0 / (4.0 * 0.7 * 1.3)).abs() < 1e-15);
        let k = kernel(2, 1.0, 1.0, SQRT_2).unwrap();
        assert!((k - SQRT_2 / 2.0).abs() < 1e-15);
        let k = kernel(4, 1.0, 1.0, 1.0).unwrap();
        assert!((k - 3f64.sqrt() / 16.0).abs() < 1e-15);
        assert!(matches!(kernel(3, 1.0, 1.0, 2.0), Err(RadialError::Domain { .. })));
        assert!(matches!(kernel(3, 1.0, 2.0, 0.5), Err(RadialError::Domain { .. })));
    }

    #[test]
    fn calibrated_constants() {
        assert!((normalization_constant(3) - 2.0).abs() < 1e-13);
        assert!((normalization_constant(2) - 2.0 / PI).abs() < 1e-13);
    }

    #[test]
    fn indicator_closed_form_in_three_dimensions() {
        let f = RadialFunction::indicator(0.0, 1.5);
        let v = sphere_average(&f, 3, 2.0, 1.0, 1e-10).unwrap();
        assert!((v.value - 0.15625).abs() < 1e-10, "{v:?}");
    }

    #[test]
    fn origin_returns_profile_at_t() {
        let f = RadialFunction::indicator(1.0, 1.2);
        assert_eq!(sphere_average(&f, 2, 0.0, 1.1, 1e-8).unwrap().value, 1.0);
        assert_eq!(sphere_average(&f, 2, 0.0, 1.5, 1e-8).unwrap().value, 0.0);
    }

    #[test]
    fn disjoint_support_is_exact_zero() {
        let f = RadialFunction::indicator(0.0, 0.5);
        let v = sphere_average(&f, 3, 2.0, 1.0, 1e-8).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.evaluations, 0);
    }

    #[test]
    fn constant_function_averages_to_one() {
        let f = RadialFunction::indicator(0.0, 10.0);
        for d in [2, 3, 4, 5] {
            let tol = if d == 2 { 1e-7 } else { 1e-9 };
            for r in [0.1, 0.5, 1.0, 1.37, 2.0, 3.5, 8.0] {
                for t in [1.0, 1.37, 2.0] {
                    let v = sphere_average(&f, d, r, t, tol).unwrap();
                    assert!((v.value - 1.0).abs() <= 10.0 * tol, "d={d} r={r} t={t} {v:?}");
                }
            }
        }
    }

    #[test]
    fn monte_carlo_constant_and_closed_form() {
        let one = RadialFunction::indicator(0.0, 10.0);
        let m = sphere_average_mc(&one, 3, 1.0, 1.5, 5000, 7, Exec::Parallel).unwrap();
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.std_error, 0.0);
        let f = RadialFunction::indicator(0.0, 1.5);
        let m = sphere_average_mc(&f, 3, 2.0, 1.0, 200_000, 11, Exec::Parallel).unwrap();
        assert!((m.mean - 0.15625).abs() < 3.0 * m.std_error, "{m:?}");
    }

    #[test]
    fn monte_carlo_is_schedule_independent() {
        let f = RadialFunction::indicator(0.5, 1.7);
        let a = sphere_average_mc(&f, 4, 1.2, 1.1, 50_000, 3, Exec::Sequential).unwrap();
        let b = sphere_average_mc(&f, 4, 1.2, 1.1, 50_000, 3, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(sphere_average_mc(&f, 4, 1.2, 1.1, 999, 3, Exec::Parallel).is_err());
    }

    #[test]
    fn closed_form_norms() {
        let f = RadialFunction::indicator(1.0, 2.0);
        assert!((f.norm_pow(1.0, 3).unwrap() - 7.0 / 3.0).abs() < 1e-14);
        let step = RadialFunction::StepTrain {
            pieces: vec![Step { a: 1.0, b: 2.0, height: 2.0 }, Step { a: 3.0, b: 4.0, height: -1.0 }],
        };
        let expect = 4.0 * 1.5 + 3.5;
        assert!((step.norm_pow(2.0, 2).unwrap() - expect).abs() < 1e-13);
        // Numeric path agrees with the closed form.
        assert!((step.numeric_norm_pow(2.0, 2).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn power_log_norm_closed_form_matches_quadrature() {
        let d = 3u32;
        let p = 1.5;
        let delta: f64 = 1e-4;
        let g = RadialFunction::PowerLog {
            exponent: 1.0 - d as f64,
            log_exponent: (1.0 - d as f64) / d as f64,
            a: delta.sqrt(),
            b: delta.powf(0.25),
        };
        let closed = g.norm_pow(p, d).unwrap();
        assert!((closed - 2f64.ln()).abs() < 1e-12);
        let numeric = g.numeric_norm_pow(p, d).unwrap();
        assert!((closed - numeric).abs() < 1e-9, "{closed} {numeric}");
    }

    #[test]
    fn step_train_eval_and_integral() {
        let f = RadialFunction::StepTrain {
            pieces: vec![Step { a: 1.0, b: 2.0, height: 3.0 }, Step { a: 4.0, b: 5.0, height: 1.0 }],
        };
        assert_eq!(f.eval(1.5), 3.0);
        assert_eq!(f.eval(3.0), 0.0);
        assert_eq!(f.eval(5.0), 1.0);
        assert!((f.integral(1.5, 4.5).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(f.breakpoints_in(1.5, 4.5), vec![2.0, 4.0]);
    }

    #[test]
    fn smooth_bump_integral_is_numeric() {
        let f = RadialFunction::SmoothBump { center: 2.0, width: 0.5 };
        let v = f.integral(0.0, 5.0).unwrap();
        // ∫_{-1}^{1} exp(-1/(1-x²)) dx ≈ 0.443994, times e and the width.
        let expect = 0.5 * std::f64::consts::E * 0.443_993_816_168_079_4;
        assert!((v - expect).abs() < 1e-9, "{v}");
    }

    #[test]
    fn validation_and_json() {
        assert!(RadialFunction::indicator(2.0, 1.0).validate().is_err());
        assert!(RadialFunction::SmoothBump { center: 0.1, width: 0.2 }.validate().is_err());
        let bad = RadialFunction::PowerLog { exponent: 0.0, log_exponent: -1.0, a: 0.1, b: 1.0 };
        assert!(bad.validate().is_err());
        let f = RadialFunction::indicator(0.0, 1.5).scaled(2.0);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"scaled","params":{"factor":2.0,"inner":{"kind":"indicator_interval","params":{"a":0.0,"b":1.5}}}}"#
        );
        let back: RadialFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
