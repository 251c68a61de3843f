//! Scaling experiments for the lower-bound constructions, and a scan of
//! the `(1/p, 1/q)` square against the predicted type regions.
//!
//! Each experiment measures a ratio `‖M_E f‖_q / ‖f‖_p` for a family of
//! test functions indexed by a scale, fits `log2` of the ratio against the
//! scale, and compares the slope with the exponent the construction
//! predicts. Only exponents are compared; the constants are unknown.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts::{csv_string, SCHEMA_VERSION};
use crate::dilation_sets::{DilationSet, SetError, WindowSpec};
use crate::fit::{ExponentFit, FitError};
use crate::maximal_ops::MaximalError;
use crate::numeric::Number;
use crate::par::{det_sum, Exec};
use crate::quadrature::gauss_legendre;
use crate::radial_averages::{sphere_average, RadialError, RadialFunction, Step};
use crate::spectra::{minkowski_estimate, CoveringProfile, ScaleWindow, SpectraError};
use crate::type_sets::{NuSharp, TypeRegion, TypeSetError};

/// Allowed excess of a fitted slope over its prediction.
pub const SLOPE_TOLERANCE: f64 = 0.1;
/// Allowed spread of a quantity that should be constant up to a factor.
pub const CONSTANT_FACTOR: f64 = 4.0;
/// Growth exponent above which a scan point counts as excluded.
pub const EXCLUSION_THRESHOLD: f64 = 0.05;
/// Scan points closer than this to the predicted boundary are not judged.
pub const BOUNDARY_MARGIN: f64 = 0.05;
/// Shortest window (in dyadic scales) for a growth exponent.
pub const MIN_GROWTH_SPAN: u32 = 6;
/// Largest `|c1|` for the annulus offsets `r = t - t_L + c1 δ`.
pub const MAX_ANNULUS_OFFSET: f64 = 0.1;

const GL_NODES: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Maximal(#[from] MaximalError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    TypeSet(#[from] TypeSetError),
}

type Result<T> = std::result::Result<T, ExperimentError>;

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidParameter(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Pq,
    Knapp,
    Stein,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Pq => "pq",
            ExperimentKind::Knapp => "knapp",
            ExperimentKind::Stein => "stein",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// One scale of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    /// `k` for the `p ≤ q` family, `δ` otherwise.
    pub scale: f64,
    /// Fit abscissa: `k`, or `log2 δ`.
    pub abscissa: f64,
    pub input_norm: f64,
    pub output_norm: f64,
    pub ratio: f64,
    pub log2_ratio: f64,
    /// Predicted size of the ratio up to a constant, where one is defined.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference: Option<f64>,
}

impl ScalePoint {
    fn new(scale: f64, abscissa: f64, input_norm: f64, output_norm: f64) -> Self {
        let ratio = output_norm / input_norm;
        ScalePoint {
            scale,
            abscissa,
            input_norm,
            output_norm,
            ratio,
            log2_ratio: ratio.log2(),
            reference: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub d: u32,
    pub p: f64,
    pub q: f64,
    pub set: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<WindowSpec>,
    pub points: Vec<ScalePoint>,
    pub fit: ExponentFit,
    pub predicted_slope: f64,
    /// Secondary fit: the covering slope for the Knapp family, the
    /// logarithmic exponent for the Stein family.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auxiliary_fit: Option<ExponentFit>,
    pub verdict: Verdict,
}

impl ExperimentRecord {
    /// Per-scale CSV with the fit repeated on each row.
    pub fn to_csv(&self) -> csv::Result<String> {
        let first = match self.experiment {
            ExperimentKind::Pq => "k",
            _ => "log2_delta",
        };
        csv_string(&format!("experiment_{}", self.experiment.id()), |w| {
            w.write_record([
                first,
                "log2_ratio",
                "slope",
                "intercept",
                "r_squared",
                "predicted_slope",
            ])?;
            for pt in &self.points {
                w.write_record([
                    pt.abscissa.to_string(),
                    pt.log2_ratio.to_string(),
                    self.fit.slope.to_string(),
                    self.fit.intercept.to_string(),
                    self.fit.r_squared.to_string(),
                    self.predicted_slope.to_string(),
                ])?;
            }
            Ok(())
        })
    }
}

/// Ordinary least squares through `(log-scale, log-value)` points.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    Ok(ExponentFit::from_points(points)?)
}

/// Short description of a set for records.
pub fn describe_set(set: &DilationSet) -> String {
    let what = set.profile().map(|p| p.description.as_str()).unwrap_or("cell list");
    format!("{what}, depth {}, {} cells", set.depth(), set.len())
}

fn check_pq(d: u32, p: f64, q: f64) -> Result<()> {
    if d < 2 {
        return Err(invalid(format!("dimension {d} < 2")));
    }
    if !(p >= 1.0 && p.is_finite() && q >= p && q.is_finite()) {
        return Err(invalid(format!("need 1 <= p <= q < inf, got p={p}, q={q}")));
    }
    Ok(())
}

/// `δ = 2^-m` for `m` in `m_range`, checked against `[lo, hi]`.
fn dyadic_deltas(m_range: (u32, u32), lo: u32, hi: u32) -> Result<Vec<u32>> {
    let (a, b) = m_range;
    if !(lo <= a && a < b && b <= hi) || b - a < 2 {
        return Err(invalid(format!(
            "scale exponents {a}..={b} must be increasing, span >= 3 values, within [{lo}, {hi}]"
        )));
    }
    Ok((a..=b).collect())
}

/// The step train `2^(-k(d-1)/p) Σ_{n=1}^{2^(k-5)} 1_[2^k+8n+1, 2^k+8n+7]`.
pub fn pq_test_function(k: u32, d: u32, p: f64) -> RadialFunction {
    let base = (k as f64).exp2();
    let height = (-(k as f64) * (d as f64 - 1.0) / p).exp2();
    let pieces = (1..=1u64 << (k - 5))
        .map(|n| {
            let x = base + 8.0 * n as f64;
            Step { a: x + 1.0, b: x + 7.0, height }
        })
        .collect();
    RadialFunction::StepTrain { pieces }
}

/// Ratio family for the necessity of `p ≤ q`.
///
/// `‖f_k‖_p` is exact. `M_E f_k` is evaluated by quadrature at the middle
/// of each inner annulus `[2^k+8n+3, 2^k+8n+5]`, where every average of the
/// matching step equals its height, and taken constant across the annulus;
/// the rest of space is dropped, so the output norm is a lower bound.
pub fn experiment_pq(
    set: &DilationSet,
    d: u32,
    p: f64,
    q: f64,
    k_range: (u32, u32),
    exec: Exec,
) -> Result<ExperimentRecord> {
    check_pq(d, p, q)?;
    let ks = dyadic_deltas(k_range, 6, 16)?;
    let ts = set.sample_dilations();
    let probe = [ts[0], ts[ts.len() - 1]];
    let dd = d as f64;
    let mut points = Vec::with_capacity(ks.len());
    for &k in &ks {
        let f = pq_test_function(k, d, p);
        let input = f.weighted_norm(p, d)?;
        let RadialFunction::StepTrain { pieces } = &f else { unreachable!() };
        let terms: Vec<Result<f64>> = exec.map(pieces, |s| {
            let (lo, hi) = (s.a + 2.0, s.b - 2.0);
            let mid = 0.5 * (lo + hi);
            let mut v = 0.0f64;
            for &t in &probe {
                let avg = sphere_average(&f, d, mid, t, 1e-10 * s.height)?;
                v = v.max(avg.value.abs());
            }
            Ok(v.powf(q) * (hi.powf(dd) - lo.powf(dd)) / dd)
        });
        let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
        let output = det_sum(&terms).powf(1.0 / q);
        points.push(ScalePoint::new(k as f64, k as f64, input, output));
    }
    let fit = fit_exponent(&points.iter().map(|pt| (pt.abscissa, pt.log2_ratio)).collect::<Vec<_>>())?;
    let predicted_slope = -dd * (1.0 / p - 1.0 / q);
    Ok(ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        experiment: ExperimentKind::Pq,
        d,
        p,
        q,
        set: describe_set(set),
        window: None,
        points,
        fit: fit.clone(),
        predicted_slope,
        auxiliary_fit: None,
        verdict: Verdict::from_bool(fit.slope >= predicted_slope - SLOPE_TOLERANCE),
    })
}

/// One dilation per depth-`m` cell of `set`: its first sample dilation.
fn representatives(set: &DilationSet, m: u32) -> Vec<f64> {
    let h = (-(m as f64)).exp2();
    let mut out: Vec<f64> = Vec::new();
    let mut last_cell = None;
    for t in set.sample_dilations() {
        let cell = (((t - 1.0) / h).floor() as i64).min((1i64 << m) - 1);
        if last_cell != Some(cell) {
            out.push(t);
            last_cell = Some(cell);
        }
    }
    out
}

/// `∫_lo^hi max_{t∈ts} |A_t g(r)|^q r^(d-1) dr` by Gauss–Legendre on the
/// segments cut by the intervals `[lo_i, hi_i]`, each with its `t_i`.
fn union_norm_pow(
    g: &RadialFunction,
    d: u32,
    q: f64,
    pieces: &[(f64, f64, f64)],
    tol: f64,
    exec: Exec,
) -> Result<f64> {
    let mut cuts: Vec<f64> = pieces.iter().flat_map(|&(lo, hi, _)| [lo, hi]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let segments: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    let (nodes, weights) = gauss_legendre(GL_NODES);
    let dd = d as f64;
    let terms: Vec<Result<f64>> = exec.map(&segments, |&(a, b)| {
        let mid = 0.5 * (a + b);
        let active: Vec<f64> = pieces
            .iter()
            .filter(|&&(lo, hi, _)| lo <= mid && mid <= hi)
            .map(|&(_, _, t)| t)
            .collect();
        if active.is_empty() {
            return Ok(0.0);
        }
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let r = mid + half * x;
            let mut v = 0.0f64;
            for &t in &active {
                v = v.max(sphere_average(g, d, r, t, tol)?.value.abs());
            }
            sum += w * v.powf(q) * r.powf(dd - 1.0);
        }
        Ok(half * sum)
    });
    let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(det_sum(&terms))
}

/// Annulus family `g_δ = 1_[t_L-δ, t_L+δ]` with `t_L` the left end of `J`.
///
/// `M_E g_δ` is bounded below on `D = ∪ [t - t_L - δ/10, t - t_L + δ/10]`
/// by `A_t g_δ`, with one `t ∈ E ∩ J`, `|t - t_L| ≥ δ`, per `δ`-cell. The
/// prediction is `(d-1)/2 + 1/q - 1/p - c/q` with `c` the fitted slope of
/// `log2 N(E ∩ J, δ)` against `log2(1/δ)` over the same scales.
pub fn experiment_knapp(
    set: &DilationSet,
    d: u32,
    p: f64,
    q: f64,
    window: WindowSpec,
    m_range: (u32, u32),
    exec: Exec,
) -> Result<ExperimentRecord> {
    check_pq(d, p, q)?;
    if q < 2.0 {
        return Err(invalid(format!("the annulus family needs q >= 2, got q={q}")));
    }
    let ms = dyadic_deltas(m_range, 4, 12)?;
    if window.level > ms[0] {
        return Err(invalid(format!(
            "window level {} is finer than the largest delta 2^-{}",
            window.level, ms[0]
        )));
    }
    let last = *ms.last().unwrap();
    if set.depth() < last {
        return Err(invalid(format!("set depth {} below finest scale {last}", set.depth())));
    }
    let local = set.restrict(window)?;
    let t_l = window.left_endpoint();
    let dd = d as f64;
    let mut points = Vec::with_capacity(ms.len());
    let mut covering = Vec::with_capacity(ms.len());
    for &m in &ms {
        let delta = (-(m as f64)).exp2();
        covering.push((m as f64, (local.covering_number(m)? as f64).log2()));
        let g = RadialFunction::indicator(t_l - delta, t_l + delta);
        let input = g.weighted_norm(p, d)?;
        let pieces: Vec<(f64, f64, f64)> = representatives(&local, m)
            .into_iter()
            .filter(|&t| (t - t_l).abs() >= delta && t <= 2.0 * t_l)
            .map(|t| {
                let c = t - t_l;
                (c - 0.1 * delta, c + 0.1 * delta, t)
            })
            .filter(|&(lo, _, _)| lo > 0.0)
            .collect();
        if pieces.is_empty() {
            return Err(invalid(format!("no admissible dilation at delta 2^-{m}")));
        }
        let tol = 1e-9 * delta.powf(0.5 * (dd - 1.0));
        let output = union_norm_pow(&g, d, q, &pieces, tol, exec)?.powf(1.0 / q);
        points.push(ScalePoint::new(delta, -(m as f64), input, output));
    }
    let fit = fit_exponent(&points.iter().map(|pt| (pt.abscissa, pt.log2_ratio)).collect::<Vec<_>>())?;
    let cover = fit_exponent(&covering)?;
    let predicted_slope = 0.5 * (dd - 1.0) + 1.0 / q - 1.0 / p - cover.slope / q;
    Ok(ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        experiment: ExperimentKind::Knapp,
        d,
        p,
        q,
        set: describe_set(set),
        window: Some(window),
        points,
        fit: fit.clone(),
        predicted_slope,
        auxiliary_fit: Some(cover),
        verdict: Verdict::from_bool(fit.slope <= predicted_slope + SLOPE_TOLERANCE),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRow {
    pub delta: f64,
    pub c1: f64,
    pub r: f64,
    pub average: f64,
    /// `A_t g_δ(r) / (δ/r)^((d-1)/2)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub schema_version: u32,
    pub d: u32,
    pub t_left: f64,
    pub t: f64,
    pub rows: Vec<AnnulusRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub verdict: Verdict,
}

impl AnnulusReport {
    pub fn to_csv(&self) -> csv::Result<String> {
        csv_string("claim_annulus", |w| {
            w.write_record(["delta", "c1", "r", "average", "ratio"])?;
            for row in &self.rows {
                w.write_record([
                    row.delta.to_string(),
                    row.c1.to_string(),
                    row.r.to_string(),
                    row.average.to_string(),
                    row.ratio.to_string(),
                ])?;
            }
            Ok(())
        })
    }
}

/// `A_t g_δ(r) / (δ/r)^((d-1)/2)` at `r = t - t_L + c1 δ`, over all `δ`
/// and offsets `c1`. Passes when the ratio is positive and varies by at
/// most [`CONSTANT_FACTOR`].
pub fn claim_annulus(
    d: u32,
    t_left: f64,
    t: f64,
    deltas: &[f64],
    offsets: &[f64],
) -> Result<AnnulusReport> {
    if d < 2 {
        return Err(invalid(format!("dimension {d} < 2")));
    }
    if deltas.is_empty() || offsets.is_empty() {
        return Err(invalid("need at least one delta and one offset"));
    }
    if !(t_left > 0.0 && t <= 2.0 * t_left) {
        return Err(invalid(format!("need 0 < t <= 2 t_L, got t={t}, t_L={t_left}")));
    }
    if let Some(c) = offsets.iter().find(|c| c.abs() > MAX_ANNULUS_OFFSET) {
        return Err(invalid(format!("offset c1={c} exceeds {MAX_ANNULUS_OFFSET} in size")));
    }
    let mut rows = Vec::new();
    for &delta in deltas {
        if !(delta > 0.0 && t - t_left >= delta) {
            return Err(invalid(format!("need 0 < delta <= t - t_L, got delta={delta}")));
        }
        let g = RadialFunction::indicator(t_left - delta, t_left + delta);
        let scale = |r: f64| (delta / r).powf(0.5 * (d as f64 - 1.0));
        for &c1 in offsets {
            let r = t - t_left + c1 * delta;
            let average = sphere_average(&g, d, r, t, 1e-10 * scale(r))?.value;
            rows.push(AnnulusRow { delta, c1, r, average, ratio: average / scale(r) });
        }
    }
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let ok = min_ratio > 0.0 && max_ratio <= CONSTANT_FACTOR * min_ratio;
    Ok(AnnulusReport {
        schema_version: SCHEMA_VERSION,
        d,
        t_left,
        t,
        rows,
        min_ratio,
        max_ratio,
        verdict: Verdict::from_bool(ok),
    })
}

/// `|x|^(1-d) (ln 1/|x|)^((1-d)/d)` on `[δ^(1/2), δ^(1/4)]`.
pub fn stein_test_function(d: u32, delta: f64) -> RadialFunction {
    let dd = d as f64;
    RadialFunction::PowerLog {
        exponent: 1.0 - dd,
        log_exponent: (1.0 - dd) / dd,
        a: delta.sqrt(),
        b: delta.powf(0.25),
    }
}

/// `N(E,δ)^(1/q) δ^(1/q) (ln 1/δ)^(1/d)`.
pub fn stein_functional(covering: u64, d: u32, q: f64, delta: f64) -> f64 {
    (covering as f64 * delta).powf(1.0 / q) * (1.0 / delta).ln().powf(1.0 / d as f64)
}

/// Logarithmic family at `p = d/(d-1)`.
///
/// `M_E g` is bounded below on the union of the `δ`-cells meeting `E` by
/// `A_t g` with `t` the sample dilation nearest to `r`. The record's
/// reference values are [`stein_functional`]; the verdict asks the ratio
/// measured/reference to stay above a quarter of its median.
pub fn experiment_stein_log(
    set: &DilationSet,
    d: u32,
    q: f64,
    m_range: (u32, u32),
    exec: Exec,
) -> Result<ExperimentRecord> {
    let dd = d as f64;
    let p = dd / (dd - 1.0);
    check_pq(d, p, q)?;
    let profile = set
        .profile()
        .ok_or_else(|| invalid("the logarithmic family needs generator metadata"))?;
    if profile.beta.to_f64() >= 1.0 {
        return Err(invalid("the logarithmic family needs a closure of measure zero"));
    }
    let ms = dyadic_deltas(m_range, 6, 16)?;
    let last = *ms.last().unwrap();
    if set.depth() < last {
        return Err(invalid(format!("set depth {} below finest scale {last}", set.depth())));
    }
    let ts = set.sample_dilations();
    let nearest = |r: f64| {
        let i = ts.partition_point(|&t| t < r);
        match (i.checked_sub(1).map(|j| ts[j]), ts.get(i)) {
            (Some(a), Some(&b)) => {
                if r - a <= b - r {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!("sets are nonempty"),
        }
    };
    let mut points = Vec::with_capacity(ms.len());
    for &m in &ms {
        let delta = (-(m as f64)).exp2();
        let g = stein_test_function(d, delta);
        let input = g.weighted_norm(p, d)?;
        let cells = set.ancestors(m)?;
        let pieces: Vec<(f64, f64, f64)> = cells
            .iter()
            .map(|&c| {
                let lo = 1.0 + c as f64 * delta;
                let t = nearest(lo + 0.5 * delta);
                (lo, lo + delta, t)
            })
            .collect();
        // Each cell gets its own t; nodes use the t of the cell they lie in.
        let (nodes, weights) = gauss_legendre(GL_NODES);
        let terms: Vec<Result<f64>> = exec.map(&pieces, |&(lo, hi, _)| {
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mut sum = 0.0;
            for (x, w) in nodes.iter().zip(&weights) {
                let r = mid + half * x;
                let v = sphere_average(&g, d, r, nearest(r), 1e-10)?.value.abs();
                sum += w * v.powf(q) * r.powf(dd - 1.0);
            }
            Ok(half * sum)
        });
        let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
        let output = det_sum(&terms).powf(1.0 / q);
        let mut pt = ScalePoint::new(delta, -(m as f64), input, output);
        pt.reference = Some(stein_functional(cells.len() as u64, d, q, delta));
        points.push(pt);
    }
    let fit = fit_exponent(&points.iter().map(|pt| (pt.abscissa, pt.log2_ratio)).collect::<Vec<_>>())?;
    let reference_fit = fit_exponent(
        &points.iter().map(|pt| (pt.abscissa, pt.reference.unwrap().log2())).collect::<Vec<_>>(),
    )?;
    // ln(ratio / (N δ)^(1/q)) against ln ln(1/δ): slope 1/d when the
    // logarithmic factor is sharp.
    let log_fit = fit_exponent(
        &points
            .iter()
            .zip(&ms)
            .map(|(pt, &m)| {
                let n = set.covering_number(m).unwrap_or(1) as f64;
                let x = (1.0 / pt.scale).ln().ln();
                (x, (pt.ratio / (n * pt.scale).powf(1.0 / q)).ln())
            })
            .collect::<Vec<_>>(),
    )?;
    let rel: Vec<f64> = points.iter().map(|pt| pt.ratio / pt.reference.unwrap()).collect();
    let verdict = Verdict::from_bool(min_over_median(&rel) >= 1.0 / CONSTANT_FACTOR);
    Ok(ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        experiment: ExperimentKind::Stein,
        d,
        p,
        q,
        set: describe_set(set),
        window: None,
        points,
        fit,
        predicted_slope: reference_fit.slope,
        auxiliary_fit: Some(log_fit),
        verdict,
    })
}

/// `min / median` of positive values.
pub fn min_over_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let median = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    v[0] / median
}

/// Largest OLS slope of `values` (indexed from `m_min`) over the windows
/// `[m_min, m]` spanning at least [`MIN_GROWTH_SPAN`] scales, or over the
/// whole range when it is shorter. Refining the scale range only adds
/// windows, so the result never decreases.
pub fn growth_exponent(m_min: u32, values: &[f64]) -> Result<f64> {
    let n = values.len();
    let span = (MIN_GROWTH_SPAN as usize).min(n.saturating_sub(1)).max(2);
    let mut best = f64::NEG_INFINITY;
    for end in span..n {
        let f = ExponentFit::over_scales(m_min as usize, &values[..=end])?;
        best = best.max(f.slope);
    }
    if best == f64::NEG_INFINITY {
        return Err(FitError::TooFewPoints(n).into());
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub inv_p: f64,
    pub inv_q: f64,
    pub exponent_easy: f64,
    pub exponent_knapp: f64,
    pub excluded: bool,
    pub predicted_member: bool,
    /// Distance to the predicted boundary, positive inside.
    pub signed_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub schema_version: u32,
    pub d: u32,
    pub resolution: u32,
    pub window: ScaleWindow,
    pub region: String,
    pub rows: Vec<ScanRow>,
    /// Points outside the region by more than the margin yet not excluded.
    pub missed_exclusions: usize,
    /// Points inside the region by more than the margin yet excluded.
    pub false_exclusions: usize,
    pub verdict: Verdict,
}

impl RegionScan {
    pub fn to_csv(&self) -> csv::Result<String> {
        csv_string("region_scan", |w| {
            w.write_record([
                "inv_p",
                "inv_q",
                "exponent_easy",
                "exponent_knapp",
                "excluded",
                "predicted_member",
            ])?;
            for row in &self.rows {
                w.write_record([
                    row.inv_p.to_string(),
                    row.inv_q.to_string(),
                    row.exponent_easy.to_string(),
                    row.exponent_knapp.to_string(),
                    row.excluded.to_string(),
                    row.predicted_member.to_string(),
                ])?;
            }
            Ok(())
        })
    }
}

/// Region the scan is compared with: the triangle for `d ≥ 3`, the
/// closure region for `d = 2` (closed form when the profile carries
/// `β, γ`, estimated otherwise).
pub fn predicted_region(profile: &CoveringProfile, d: u32, window: ScaleWindow) -> Result<TypeRegion> {
    let beta = match profile.analytic() {
        Some(a) => a.beta,
        None => Number::float(minkowski_estimate(profile, window)?.slope.clamp(0.0, 1.0)),
    };
    if d >= 3 {
        return Ok(TypeRegion::triangle(d, beta)?);
    }
    match profile.analytic() {
        Some(a) => Ok(TypeRegion::closure_closed_form(a.beta, a.gamma)?),
        None => Ok(TypeRegion::closure_d2(
            2,
            beta,
            NuSharp::Estimated { profile: std::sync::Arc::new(profile.clone()), window },
        )?),
    }
}

fn log_count_rows(profile: &CoveringProfile, window: ScaleWindow) -> Vec<Vec<f64>> {
    (window.m_min..=window.m_max)
        .map(|m| profile.row(m).iter().map(|&c| (c as f64).log2()).collect())
        .collect()
}

fn exponents_from_rows(
    log_counts: &[Vec<f64>],
    d: u32,
    x: f64,
    y: f64,
    window: ScaleWindow,
) -> Result<(f64, f64)> {
    let dd = d as f64;
    let scales = window.m_min..=window.m_max;
    let easy: Vec<f64> = scales
        .clone()
        .zip(log_counts)
        .map(|(m, lc)| y * lc[0] - m as f64 * (dd - 1.0 + y - dd * x))
        .collect();
    let knapp: Vec<f64> = scales
        .zip(log_counts)
        .map(|(m, lc)| {
            let best = lc
                .iter()
                .enumerate()
                .map(|(k, l)| y * l + k as f64 * (dd - 1.0) * (0.5 - y))
                .fold(f64::NEG_INFINITY, f64::max);
            best - m as f64 * (0.5 * (dd - 1.0) + y - x)
        })
        .collect();
    Ok((
        (dd * (y - x)).max(growth_exponent(window.m_min, &easy)?),
        growth_exponent(window.m_min, &knapp)?,
    ))
}

/// `(exponent_easy, exponent_knapp)` at `(1/p, 1/q) = (x, y)`; see
/// [`region_scan`].
pub fn scan_exponents(
    profile: &CoveringProfile,
    d: u32,
    x: f64,
    y: f64,
    window: ScaleWindow,
) -> Result<(f64, f64)> {
    if window.m_max > profile.depth() || window.m_min + 2 > window.m_max {
        return Err(SpectraError::Window {
            m_min: window.m_min,
            m_max: window.m_max,
            depth: profile.depth(),
        }
        .into());
    }
    exponents_from_rows(&log_count_rows(profile, window), d, x, y, window)
}

/// Growth exponents of the two necessary-condition functionals on the
/// grid `(i/R, j/R)`, and their agreement with the predicted region.
///
/// `exponent_easy` is the larger of `d(1/q - 1/p)` (the `p ≤ q` family)
/// and the growth in `m` of `(1/q) log2 N(E, 2^-m) - m(d - 1 + 1/q - d/p)`.
/// `exponent_knapp` is the growth of
/// `max_k [(1/q) log2 counts(k,m) + k(d-1)(1/2 - 1/q)] - m((d-1)/2 + 1/q - 1/p)`,
/// the annulus functional with `|J| = 2^-k`, `δ = 2^-m`.
pub fn region_scan(
    profile: &CoveringProfile,
    d: u32,
    resolution: u32,
    window: ScaleWindow,
    exec: Exec,
) -> Result<RegionScan> {
    if d < 2 {
        return Err(invalid(format!("dimension {d} < 2")));
    }
    if !(1..=64).contains(&resolution) {
        return Err(invalid(format!("resolution {resolution} outside [1, 64]")));
    }
    if window.m_max > profile.depth() || window.m_min + 2 > window.m_max {
        return Err(SpectraError::Window {
            m_min: window.m_min,
            m_max: window.m_max,
            depth: profile.depth(),
        }
        .into());
    }
    let region = predicted_region(profile, d, window)?;
    let log_counts = log_count_rows(profile, window);
    let res = resolution as usize;
    let grid: Vec<(usize, usize)> =
        (0..=res).flat_map(|i| (0..=res).map(move |j| (i, j))).collect();
    let rows: Vec<Result<ScanRow>> = exec.map(&grid, |&(i, j)| {
        let (x, y) = (i as f64 / res as f64, j as f64 / res as f64);
        let (exponent_easy, exponent_knapp) = exponents_from_rows(&log_counts, d, x, y, window)?;
        let excluded = exponent_easy > EXCLUSION_THRESHOLD || exponent_knapp > EXCLUSION_THRESHOLD;
        let signed_distance = region.signed_distance((x, y))?;
        let pt = crate::type_sets::ExponentPair::new(
            Number::ratio(i as i64, res as i64),
            Number::ratio(j as i64, res as i64),
        )?;
        Ok(ScanRow {
            inv_p: x,
            inv_q: y,
            exponent_easy,
            exponent_knapp,
            excluded,
            predicted_member: region.contains(pt)?,
            signed_distance,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let missed_exclusions =
        rows.iter().filter(|r| r.signed_distance < -BOUNDARY_MARGIN && !r.excluded).count();
    let false_exclusions =
        rows.iter().filter(|r| r.signed_distance > BOUNDARY_MARGIN && r.excluded).count();
    Ok(RegionScan {
        schema_version: SCHEMA_VERSION,
        d,
        resolution,
        window,
        region: region.mode_label(),
        rows,
        missed_exclusions,
        false_exclusions,
        verdict: Verdict::from_bool(missed_exclusions == 0 && false_exclusions == 0),
    })
}
