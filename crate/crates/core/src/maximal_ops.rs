//! The restricted maximal operator `M_E f = sup_{t∈E} |A_t f|` on radial
//! functions, weighted norms, and the pieces of the pointwise decomposition
//! that dominates it.
//!
//! Suprema over `t ∈ E` are taken over [`DilationSet::sample_dilations`],
//! so every reported value is a lower bound for the supremum over the set.
//! A constant factor on `f` (the `Scaled` variant) is peeled off before any
//! quadrature, which makes all quantities here exactly homogeneous; the
//! tolerance then applies to the unscaled profile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts::csv_string;
use crate::dilation_sets::{DilationSet, SetError};
use crate::par::{det_sum, Exec};
use crate::quadrature::{integrate, integrate_endpoint_singular, DEFAULT_MAX_SUBDIVISIONS};
use crate::radial_averages::{sphere_average, RadialError, RadialFunction, Step};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaximalError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Set(#[from] SetError),
}

fn invalid(msg: impl Into<String>) -> MaximalError {
    MaximalError::InvalidParameter(msg.into())
}

impl From<crate::quadrature::QuadratureError> for MaximalError {
    fn from(e: crate::quadrature::QuadratureError) -> Self {
        MaximalError::Radial(e.into())
    }
}

/// Denominators at or below this are skipped by [`domination_check`].
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Depth cap for the `t ∈ [1,2]` grid used by the `d ≥ 3` remainder pieces.
pub const REMAINDER_GRID_DEPTH: u32 = 10;

/// Cell-centered nodes with weights `∫_cell r^(d-1) dr`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    d: u32,
    edges: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Grid whose cells are the gaps between consecutive `edges`.
    pub fn from_edges(mut edges: Vec<f64>, d: u32) -> Result<Self, MaximalError> {
        if d < 2 {
            return Err(invalid(format!("dimension {d} < 2")));
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        if edges.len() < 2 || !(edges[0] >= 0.0) || !edges.iter().all(|e| e.is_finite()) {
            return Err(invalid("grid needs at least two finite, nonnegative edges"));
        }
        let dd = d as f64;
        let nodes = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let weights = edges.windows(2).map(|w| (w[1].powf(dd) - w[0].powf(dd)) / dd).collect();
        Ok(RadialGrid { d, edges, nodes, weights })
    }

    /// `n` equal cells on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize, d: u32) -> Result<Self, MaximalError> {
        Self::uniform_with_breaks(lo, hi, n, &[], d)
    }

    /// `n` equal cells on `[lo, hi]`, further split at every break inside,
    /// so that step functions with those jumps are constant on each cell.
    pub fn uniform_with_breaks(
        lo: f64,
        hi: f64,
        n: usize,
        breaks: &[f64],
        d: u32,
    ) -> Result<Self, MaximalError> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) || n == 0 {
            return Err(invalid(format!("uniform grid on [{lo}, {hi}] with {n} cells")));
        }
        let h = (hi - lo) / n as f64;
        let mut edges: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
        edges[n] = hi;
        edges.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
        Self::from_edges(edges, d)
    }

    /// Uniform grid adapted to `f`: covers `[0, r_max]` and splits at the
    /// breakpoints of `f`.
    pub fn for_function(
        f: &RadialFunction,
        d: u32,
        r_max: f64,
        n: usize,
    ) -> Result<Self, MaximalError> {
        Self::uniform_with_breaks(0.0, r_max, n, &f.breakpoints(), d)
    }

    /// Halves every cell.
    pub fn refined(&self) -> Self {
        let mut edges = self.edges.clone();
        edges.extend(self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        Self::from_edges(edges, self.d).expect("refinement of a valid grid")
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(Σ w_i |v_i|^q)^(1/q)`, approximating `‖v‖_{L^q(r^(d-1) dr)}`.
pub fn weighted_norm(values: &[f64], grid: &RadialGrid, q: f64) -> Result<f64, MaximalError> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid(format!("norm exponent q={q} outside [1, inf)")));
    }
    if values.len() != grid.len() {
        return Err(invalid(format!("{} values for {} grid nodes", values.len(), grid.len())));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite value {v}")));
    }
    let terms: Vec<f64> =
        values.iter().zip(&grid.weights).map(|(v, w)| w * v.abs().powf(q)).collect();
    Ok(det_sum(&terms).powf(1.0 / q))
}

/// Splits `f = factor · inner` with `inner` not itself scaled.
fn peel(f: &RadialFunction) -> (f64, &RadialFunction) {
    match f {
        RadialFunction::Scaled { factor, inner } => {
            let (c, g) = peel(inner);
            (factor * c, g)
        }
        _ => (1.0, f),
    }
}

fn check_common(d: u32, r: f64, tol: f64) -> Result<(), MaximalError> {
    if d < 2 {
        return Err(invalid(format!("dimension {d} < 2")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius {r} must be finite and nonnegative")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    Ok(())
}

/// `max_t |A_t f(r)|` over `ts` and the maximizing `t`, for unscaled `f`.
fn sup_average(
    f: &RadialFunction,
    d: u32,
    r: f64,
    ts: &[f64],
    tol: f64,
) -> Result<(f64, Option<f64>), MaximalError> {
    let mut best = (0.0, None);
    for &t in ts {
        let v = sphere_average(f, d, r, t, tol)?.value.abs();
        if best.1.is_none() || v > best.0 {
            best = (v, Some(t));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalValue {
    /// Lower bound for `M_E f(r)`.
    pub value: f64,
    pub argmax_t: Option<f64>,
    /// `|value - value at depth-1|`; absent at depth 1.
    pub refinement_delta: Option<f64>,
}

/// `M_E f(r)` with `t` over the sample dilations of `E`.
pub fn maximal_value(
    set: &DilationSet,
    f: &RadialFunction,
    d: u32,
    r: f64,
    tol: f64,
) -> Result<MaximalValue, MaximalError> {
    check_common(d, r, tol)?;
    let (c, g) = peel(f);
    let (value, argmax_t) = if c == 0.0 {
        (0.0, None)
    } else {
        let (v, t) = sup_average(g, d, r, &set.sample_dilations(), tol)?;
        (c.abs() * v, t)
    };
    let refinement_delta = if set.depth() > 1 {
        let coarse = set.coarsen(set.depth() - 1)?;
        Some((value - maximal_value_only(&coarse, f, d, r, tol)?).abs())
    } else {
        None
    };
    Ok(MaximalValue { value, argmax_t, refinement_delta })
}

/// The value part of [`maximal_value`] without the refinement study.
pub fn maximal_value_only(
    set: &DilationSet,
    f: &RadialFunction,
    d: u32,
    r: f64,
    tol: f64,
) -> Result<f64, MaximalError> {
    check_common(d, r, tol)?;
    let (c, g) = peel(f);
    if c == 0.0 {
        return Ok(0.0);
    }
    let (v, _) = sup_average(g, d, r, &set.sample_dilations(), tol)?;
    Ok(c.abs() * v)
}

/// Values of the decomposition operators at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PieceValues {
    /// `d ≥ 3`.
    ThreePiece { mp: f64, r1: f64, r2: f64 },
    /// `d = 2`, with the one-sided singular kernels.
    Planar {
        mp_minus: f64,
        mp_plus: f64,
        r1_minus: f64,
        r1_plus: f64,
        r2_minus: f64,
        r2_plus: f64,
    },
}

impl PieceValues {
    /// `(name, value)` pairs in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match *self {
            PieceValues::ThreePiece { mp, r1, r2 } => vec![("Mp", mp), ("R1", r1), ("R2", r2)],
            PieceValues::Planar { mp_minus, mp_plus, r1_minus, r1_plus, r2_minus, r2_plus } => {
                vec![
                    ("Mp_minus", mp_minus),
                    ("Mp_plus", mp_plus),
                    ("R1_minus", r1_minus),
                    ("R1_plus", r1_plus),
                    ("R2_minus", r2_minus),
                    ("R2_plus", r2_plus),
                ]
            }
        }
    }

    pub fn sum(&self) -> f64 {
        self.named().iter().map(|(_, v)| v).sum()
    }

    fn scaled(self, c: f64) -> Self {
        match self {
            PieceValues::ThreePiece { mp, r1, r2 } => {
                PieceValues::ThreePiece { mp: c * mp, r1: c * r1, r2: c * r2 }
            }
            PieceValues::Planar { mp_minus, mp_plus, r1_minus, r1_plus, r2_minus, r2_plus } => {
                PieceValues::Planar {
                    mp_minus: c * mp_minus,
                    mp_plus: c * mp_plus,
                    r1_minus: c * r1_minus,
                    r1_plus: c * r1_plus,
                    r2_minus: c * r2_minus,
                    r2_plus: c * r2_plus,
                }
            }
        }
    }

    fn zero(d: u32) -> Self {
        if d == 2 {
            PieceValues::Planar {
                mp_minus: 0.0,
                mp_plus: 0.0,
                r1_minus: 0.0,
                r1_plus: 0.0,
                r2_minus: 0.0,
                r2_plus: 0.0,
            }
        } else {
            PieceValues::ThreePiece { mp: 0.0, r1: 0.0, r2: 0.0 }
        }
    }
}

fn steps_of(f: &RadialFunction) -> Option<Vec<Step>> {
    match f {
        RadialFunction::IndicatorInterval { a, b } => Some(vec![Step { a: *a, b: *b, height: 1.0 }]),
        RadialFunction::StepTrain { pieces } => Some(pieces.clone()),
        _ => None,
    }
}

/// Which end of the integration range carries the `-1/2` singularity.
#[derive(Clone, Copy)]
enum SingularEnd {
    /// `∫_c^{c+len} (s-c)^(-1/2) f0(s) ds`.
    Left,
    /// `∫_{c-len}^c (c-s)^(-1/2) f0(s) ds`.
    Right,
}

fn inv_sqrt_integral(
    f: &RadialFunction,
    c: f64,
    len: f64,
    end: SingularEnd,
    tol: f64,
) -> Result<f64, MaximalError> {
    let (lo, hi) = match end {
        SingularEnd::Left => (c, c + len),
        SingularEnd::Right => (c - len, c),
    };
    let (sa, sb) = f.support();
    if sb <= lo || sa >= hi || len <= 0.0 {
        return Ok(0.0);
    }
    // Antiderivative in u = √|s - c| is 2·f0·u on each constant piece.
    let dist = |s: f64| (s - c).abs().sqrt();
    if let Some(steps) = steps_of(f) {
        let mut total = 0.0;
        for p in &steps {
            let (x, y) = (p.a.max(lo), p.b.min(hi));
            if y > x {
                total += 2.0 * p.height * (dist(x) - dist(y)).abs();
            }
        }
        return Ok(total);
    }
    let map = |u: f64| match end {
        SingularEnd::Left => c + u * u,
        SingularEnd::Right => c - u * u,
    };
    let cuts: Vec<f64> = f.breakpoints_in(lo, hi).into_iter().map(dist).collect();
    let umax = len.sqrt();
    let (u0, u1) = match end {
        SingularEnd::Left => (dist(sa.max(lo)), dist(sb.min(hi))),
        SingularEnd::Right => (dist(sb.min(hi)), dist(sa.max(lo))),
    };
    let r = integrate(
        |u| 2.0 * f.eval(map(u)),
        u0.min(umax),
        u1.min(umax),
        &cuts,
        tol,
        DEFAULT_MAX_SUBDIVISIONS,
    )?;
    Ok(r.value)
}

/// Grid of `[1,2]` at depth `m`: cell endpoints and centers.
fn unit_interval_samples(m: u32) -> Vec<f64> {
    let n = 1u32 << (m + 1);
    (0..=n).map(|j| 1.0 + j as f64 / n as f64).collect()
}

fn sup_over<I: IntoIterator<Item = f64>>(
    ts: I,
    mut value: impl FnMut(f64) -> Result<f64, MaximalError>,
) -> Result<f64, MaximalError> {
    let mut best = 0.0f64;
    for t in ts {
        best = best.max(value(t)?.abs());
    }
    Ok(best)
}

/// Decomposition pieces at radius `r > 0`.
///
/// The main term `Mp` and the `d = 2` remainders take the supremum over the
/// sample dilations of `E`; the `d ≥ 3` remainders range over `t ∈ [1,2]`
/// and use a grid of `[1,2]` at the depth of `E` (capped at
/// [`REMAINDER_GRID_DEPTH`]) together with the cut points `r/2` and `3r/2`.
pub fn decomposition_pieces(
    set: &DilationSet,
    f: &RadialFunction,
    d: u32,
    p: f64,
    r: f64,
    tol: f64,
) -> Result<PieceValues, MaximalError> {
    check_common(d, r, tol)?;
    if !(r > 0.0) {
        return Err(invalid("decomposition pieces need r > 0"));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("p={p} outside (1, inf)")));
    }
    let (c, g) = peel(f);
    if c == 0.0 {
        return Ok(PieceValues::zero(d));
    }
    let tol = tol;
    let ts = set.sample_dilations();
    let main: Vec<f64> = ts.iter().copied().filter(|&t| 2.0 * t > r && 2.0 * t < 3.0 * r).collect();
    let (sa, sb) = g.support();
    let meets = |lo: f64, hi: f64| sb > lo && sa < hi;
    let pieces = if d == 2 {
        let pp = 1.0 / p;
        let near: Vec<f64> = ts.iter().copied().filter(|&t| 2.0 * t <= r).collect();
        let far: Vec<f64> = ts.iter().copied().filter(|&t| 2.0 * t >= 3.0 * r).collect();
        let weighted = |s: f64| s.powf(0.5 - pp) * g.eval(s) * s.powf(pp);
        let mp = |t: f64, left: bool| -> Result<f64, MaximalError> {
            let (a, b) = ((r - t).abs(), r + t);
            if !meets(a, b) {
                return Ok(0.0);
            }
            let q = integrate_endpoint_singular(
                |s, da, db| weighted(s) / if left { da } else { db }.sqrt(),
                a,
                b,
                &g.breakpoints_in(a, b),
                tol * r,
                DEFAULT_MAX_SUBDIVISIONS,
            )?;
            Ok(q.value / r)
        };
        PieceValues::Planar {
            mp_minus: sup_over(main.iter().copied(), |t| mp(t, true))?,
            mp_plus: sup_over(main.iter().copied(), |t| mp(t, false))?,
            r1_minus: sup_over(near.iter().copied(), |t| {
                Ok(inv_sqrt_integral(g, r - t, t, SingularEnd::Left, tol)? / t.sqrt())
            })?,
            r1_plus: sup_over(near.iter().copied(), |t| {
                Ok(inv_sqrt_integral(g, r + t, t, SingularEnd::Right, tol)? / t.sqrt())
            })?,
            r2_minus: sup_over(far.iter().copied(), |t| {
                Ok(inv_sqrt_integral(g, t - r, r, SingularEnd::Left, tol)? / r.sqrt())
            })?,
            r2_plus: sup_over(far.iter().copied(), |t| {
                Ok(inv_sqrt_integral(g, t + r, r, SingularEnd::Right, tol)? / r.sqrt())
            })?,
        }
    } else {
        let dd = d as f64;
        let (e_dual, e_p) = ((dd - 1.0) * (1.0 - 1.0 / p) - 1.0, (dd - 1.0) / p);
        let scale = r.powf(1.0 - dd);
        let mp = sup_over(main.iter().copied(), |t| {
            let (a, b) = ((r - t).abs(), r + t);
            if !meets(a, b) {
                return Ok(0.0);
            }
            let q = integrate(
                |s| s.powf(e_dual) * g.eval(s) * s.powf(e_p),
                a,
                b,
                &g.breakpoints_in(a, b),
                tol / scale,
                DEFAULT_MAX_SUBDIVISIONS,
            )?;
            Ok(scale * q.value)
        })?;
        let mut grid = unit_interval_samples(set.depth().min(REMAINDER_GRID_DEPTH));
        grid.extend([0.5 * r, 1.5 * r].into_iter().filter(|t| (1.0..=2.0).contains(t)));
        let r1 = sup_over(grid.iter().copied().filter(|&t| 2.0 * t <= r), |t| {
            Ok(g.integral(r - t, r + t)? / t)
        })?;
        let r2 = sup_over(grid.iter().copied().filter(|&t| 2.0 * t >= 3.0 * r), |t| {
            Ok(g.integral(t - r, t + r)? / r)
        })?;
        PieceValues::ThreePiece { mp, r1, r2 }
    };
    Ok(pieces.scaled(c.abs()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub r: f64,
    pub maximal_value: f64,
    pub pieces: PieceValues,
    /// `None` where the sum of pieces is at most [`DENOMINATOR_FLOOR`].
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub d: u32,
    pub p: f64,
    pub max_ratio: Option<f64>,
    pub node_of_max: Option<f64>,
    pub skipped: usize,
    pub rows: Vec<NodeRow>,
}

impl DominationReport {
    /// Per-node CSV: `r, maximal_value, <pieces>, ratio` (empty ratio when
    /// skipped).
    pub fn to_csv(&self) -> csv::Result<String> {
        csv_string("domination", |w| {
            let names: Vec<&str> = match self.rows.first() {
                Some(row) => row.pieces.named().iter().map(|(n, _)| *n).collect(),
                None => PieceValues::zero(self.d).named().iter().map(|(n, _)| *n).collect(),
            };
            let mut header = vec!["r", "maximal_value"];
            header.extend(names);
            header.push("ratio");
            w.write_record(&header)?;
            for row in &self.rows {
                let mut rec = vec![row.r.to_string(), row.maximal_value.to_string()];
                rec.extend(row.pieces.named().iter().map(|(_, v)| v.to_string()));
                rec.push(row.ratio.map(|x| x.to_string()).unwrap_or_default());
                w.write_record(&rec)?;
            }
            Ok(())
        })
    }
}

/// `M_E f / Σ pieces` at every node of `grid`, in parallel over nodes.
pub fn domination_check(
    set: &DilationSet,
    f: &RadialFunction,
    p: f64,
    grid: &RadialGrid,
    tol: f64,
    exec: Exec,
) -> Result<DominationReport, MaximalError> {
    let d = grid.d();
    let rows: Vec<Result<NodeRow, MaximalError>> = exec.map(grid.nodes(), |&r| {
        let maximal_value = maximal_value_only(set, f, d, r, tol)?;
        let pieces = decomposition_pieces(set, f, d, p, r, tol)?;
        let denom = pieces.sum();
        let ratio = (denom > DENOMINATOR_FLOOR).then(|| maximal_value / denom);
        Ok(NodeRow { r, maximal_value, pieces, ratio })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut max_ratio: Option<f64> = None;
    let mut node_of_max = None;
    for row in &rows {
        if let Some(x) = row.ratio {
            if max_ratio.is_none_or(|m| x > m) {
                max_ratio = Some(x);
                node_of_max = Some(row.r);
            }
        }
    }
    let skipped = rows.iter().filter(|row| row.ratio.is_none()).count();
    Ok(DominationReport { d, p, max_ratio, node_of_max, skipped, rows })
}
