//! Predicted radial type sets in the `(1/p, 1/q)` square.
//!
//! Regions are intersections of half-planes `a·(1/p) + b·(1/q) ≤ c`. The
//! triangle `Δ_β` has three; the two-dimensional closure region adds one per
//! affine piece of `ν♯`, since for `ν♯(α) = max_i(a_i α + b_i)` the
//! constraint `(1/q) ν♯(q/2 - 1) + 1/p - 1/q ≤ 1/2` is linear in each piece.
//! With rational inputs every vertex and membership test is exact.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts::{self, SCHEMA_VERSION};
use crate::dilation_sets::AnalyticProfile;
use crate::numeric::{Number, FLOAT_TOL};
use crate::spectra::{nu_sharp_estimate, CoveringProfile, ScaleWindow, SpectraError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeSetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex formula does not apply: {0}")]
    Case(String),
    #[error("invalid region mode: {0}")]
    Mode(String),
    #[error("an estimated nu-sharp cannot evaluate the constraint at 1/q = 0")]
    InfiniteQ,
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

type Result<T> = std::result::Result<T, TypeSetError>;

fn n(v: i64) -> Number {
    Number::int(v)
}

fn half() -> Number {
    Number::ratio(1, 2)
}

fn is_zero(x: Number) -> bool {
    x.sign() == Ordering::Equal
}

/// A point `(1/p, 1/q)`; serializes as `[inv_p, inv_q]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[Number; 2]", try_from = "[Number; 2]")]
pub struct ExponentPair {
    pub inv_p: Number,
    pub inv_q: Number,
}

impl From<ExponentPair> for [Number; 2] {
    fn from(p: ExponentPair) -> Self {
        [p.inv_p, p.inv_q]
    }
}

impl TryFrom<[Number; 2]> for ExponentPair {
    type Error = TypeSetError;
    fn try_from(v: [Number; 2]) -> Result<Self> {
        ExponentPair::new(v[0], v[1])
    }
}

impl ExponentPair {
    pub fn new(inv_p: Number, inv_q: Number) -> Result<Self> {
        let unit = |x: Number| x.sign() != Ordering::Less && x.cmp_tol(&n(1), FLOAT_TOL) != Ordering::Greater;
        if !unit(inv_p) || !unit(inv_q) {
            return Err(TypeSetError::InvalidParameter(format!(
                "exponent pair ({inv_p}, {inv_q}) outside [0,1]^2"
            )));
        }
        Ok(ExponentPair { inv_p, inv_q })
    }

    /// Exact pair `(a/b, c/e)`.
    pub fn ratio(a: i64, b: i64, c: i64, e: i64) -> Self {
        ExponentPair { inv_p: Number::ratio(a, b), inv_q: Number::ratio(c, e) }
    }

    pub fn from_f64(inv_p: f64, inv_q: f64) -> Result<Self> {
        Self::new(Number::float(inv_p), Number::float(inv_q))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.inv_p.to_f64(), self.inv_q.to_f64())
    }

    pub fn is_exact(&self) -> bool {
        self.inv_p.is_exact() && self.inv_q.is_exact()
    }

    fn add(self, o: ExponentPair) -> ExponentPair {
        ExponentPair { inv_p: self.inv_p + o.inv_p, inv_q: self.inv_q + o.inv_q }
    }

    fn sub(self, o: ExponentPair) -> ExponentPair {
        ExponentPair { inv_p: self.inv_p - o.inv_p, inv_q: self.inv_q - o.inv_q }
    }

    fn scale(self, s: Number) -> ExponentPair {
        ExponentPair { inv_p: self.inv_p * s, inv_q: self.inv_q * s }
    }
}

fn cross(o: ExponentPair, a: ExponentPair, b: ExponentPair) -> Number {
    let (u, v) = (a.sub(o), b.sub(o));
    u.inv_p * v.inv_q - u.inv_q * v.inv_p
}

/// Whether `pt` lies on the segment from `a` to `b` (closed unless
/// `include_end` is false, in which case `b` itself is excluded).
pub fn on_segment(pt: ExponentPair, a: ExponentPair, b: ExponentPair, include_end: bool) -> bool {
    if !is_zero(cross(a, b, pt)) {
        return false;
    }
    let d = b.sub(a);
    let w = pt.sub(a);
    let dot = w.inv_p * d.inv_p + w.inv_q * d.inv_q;
    let len2 = d.inv_p * d.inv_p + d.inv_q * d.inv_q;
    if dot.sign() == Ordering::Less {
        return false;
    }
    match dot.cmp_tol(&len2, FLOAT_TOL) {
        Ordering::Less => true,
        Ordering::Equal => include_end || is_zero(len2),
        Ordering::Greater => false,
    }
}

fn check_d(d: u32) -> Result<()> {
    if d < 2 {
        return Err(TypeSetError::InvalidParameter(format!("dimension {d} < 2")));
    }
    Ok(())
}

fn check_unit(name: &str, x: Number) -> Result<()> {
    if x.sign() == Ordering::Less || x.cmp_tol(&n(1), FLOAT_TOL) == Ordering::Greater {
        return Err(TypeSetError::InvalidParameter(format!("{name}={x} outside [0,1]")));
    }
    Ok(())
}

fn check_beta_gamma(beta: Number, gamma: Number) -> Result<()> {
    check_unit("beta", beta)?;
    check_unit("gamma", gamma)?;
    if gamma.cmp_tol(&beta, FLOAT_TOL) == Ordering::Less {
        return Err(TypeSetError::InvalidParameter(format!("gamma={gamma} < beta={beta}")));
    }
    Ok(())
}

fn vertex(x: Number, y: Number) -> ExponentPair {
    ExponentPair { inv_p: x, inv_q: y }
}

/// `P1`, `P2` and the radial third vertex of `Δ_β`.
pub fn triangle_vertices(d: u32, beta: Number) -> Result<[ExponentPair; 3]> {
    check_d(d)?;
    check_unit("beta", beta)?;
    let dn = n(d as i64);
    let p2 = (dn - n(1)) / (dn - n(1) + beta);
    let den3 = dn * dn - n(1) + beta;
    Ok([
        vertex(n(0), n(0)),
        vertex(p2, p2),
        vertex(dn * (dn - n(1)) / den3, (dn - n(1)) / den3),
    ])
}

/// `P1, P2, P3, P4` of the non-radial quadrangle `Q(β, γ)`.
pub fn quadrangle_vertices_general(d: u32, beta: Number, gamma: Number) -> Result<[ExponentPair; 4]> {
    check_d(d)?;
    check_beta_gamma(beta, gamma)?;
    let [p1, p2, _] = triangle_vertices(d, beta)?;
    let dn = n(d as i64);
    let den3 = dn - beta + n(1);
    let den4 = dn * dn + n(2) * gamma - n(1);
    Ok([
        p1,
        p2,
        vertex((dn - beta) / den3, n(1) / den3),
        vertex(dn * (dn - n(1)) / den4, (dn - n(1)) / den4),
    ])
}

/// `P1, P2, P4rad, P5rad` of the planar radial quadrangle; needs `2γ - β > 1`.
pub fn quadrangle_vertices_radial(beta: Number, gamma: Number) -> Result<[ExponentPair; 4]> {
    check_beta_gamma(beta, gamma)?;
    if (n(2) * gamma - beta).cmp_tol(&n(1), FLOAT_TOL) != Ordering::Greater {
        return Err(TypeSetError::Case(format!(
            "radial quadrangle needs 2*gamma - beta > 1 (beta={beta}, gamma={gamma}); \
             the closure is the triangle"
        )));
    }
    let [p1, p2, _] = triangle_vertices(2, beta)?;
    let p4 = vertex(n(1) / (n(1) + gamma), n(1) / (n(2) * (n(1) + gamma)));
    let r = beta / gamma;
    let one_b = n(1) - beta;
    let one_r = n(1) - r;
    let den = one_b + n(2) * one_r;
    let p5 = vertex(
        (one_b * (n(2) - r) + n(2) * one_r) / (n(2) * den),
        one_r / den,
    );
    Ok([p1, p2, p4, p5])
}

/// `ν♯` as used by the planar closure constraint.
#[derive(Clone, Debug, PartialEq)]
pub enum NuSharp {
    /// `max(β, α, (1 - β/γ)α + β)`: the upper bound, attained by the
    /// regular sets.
    ClosedForm { beta: Number, gamma: Number },
    /// `ν♯(α) = α`, the smallest value the lower bound allows.
    Identity,
    /// Finite-scale estimate from a covering profile.
    Estimated { profile: Arc<CoveringProfile>, window: ScaleWindow },
}

impl NuSharp {
    /// Affine pieces `(a, b)` of `α ↦ max(a α + b)`, if piecewise linear.
    fn lines(&self) -> Option<Vec<(Number, Number)>> {
        match self {
            NuSharp::ClosedForm { beta, gamma } => {
                let r = if is_zero(*beta) { n(0) } else { *beta / *gamma };
                Some(vec![(n(0), *beta), (n(1), n(0)), (n(1) - r, *beta)])
            }
            NuSharp::Identity => Some(vec![(n(1), n(0))]),
            NuSharp::Estimated { .. } => None,
        }
    }

    pub fn eval(&self, alpha: f64) -> Result<f64> {
        match self {
            NuSharp::Estimated { profile, window } => {
                Ok(nu_sharp_estimate(profile, alpha, *window)?.slope)
            }
            _ => Ok(self
                .lines()
                .unwrap()
                .iter()
                .map(|(a, b)| a.to_f64() * alpha + b.to_f64())
                .fold(f64::NEG_INFINITY, f64::max)),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            NuSharp::ClosedForm { .. } => "closed_form",
            NuSharp::Identity => "identity",
            NuSharp::Estimated { .. } => "estimated",
        }
    }
}

/// `a·(1/p) + b·(1/q) ≤ c`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfPlane {
    pub a: Number,
    pub b: Number,
    pub c: Number,
    pub label: String,
}

impl HalfPlane {
    fn new(a: Number, b: Number, c: Number, label: impl Into<String>) -> Self {
        HalfPlane { a, b, c, label: label.into() }
    }

    /// Signed violation `a x + b y - c` (positive outside).
    pub fn value(&self, pt: ExponentPair) -> Number {
        self.a * pt.inv_p + self.b * pt.inv_q - self.c
    }
}

fn triangle_half_planes(d: u32, beta: Number) -> Vec<HalfPlane> {
    let dn = n(d as i64);
    vec![
        HalfPlane::new(n(-1), n(1), n(0), "diagonal"),
        HalfPlane::new(n(1), -dn, n(0), "scaling"),
        HalfPlane::new(dn, beta - n(1), dn - n(1), "beta_line"),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegionMode {
    Triangle,
    ClosureD2(NuSharp),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeRegion {
    d: u32,
    beta: Number,
    mode: RegionMode,
}

impl TypeRegion {
    pub fn triangle(d: u32, beta: Number) -> Result<Self> {
        check_d(d)?;
        check_unit("beta", beta)?;
        Ok(TypeRegion { d, beta, mode: RegionMode::Triangle })
    }

    pub fn closure_d2(d: u32, beta: Number, nu_sharp: NuSharp) -> Result<Self> {
        if d != 2 {
            return Err(TypeSetError::Mode(format!("closure_d2 requires d = 2, got d = {d}")));
        }
        check_unit("beta", beta)?;
        if let NuSharp::ClosedForm { beta: b, gamma } = &nu_sharp {
            check_beta_gamma(*b, *gamma)?;
        }
        Ok(TypeRegion { d, beta, mode: RegionMode::ClosureD2(nu_sharp) })
    }

    /// The planar closure region for known `(β, γ)` with the closed-form `ν♯`.
    pub fn closure_closed_form(beta: Number, gamma: Number) -> Result<Self> {
        Self::closure_d2(2, beta, NuSharp::ClosedForm { beta, gamma })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn beta(&self) -> Number {
        self.beta
    }

    pub fn mode(&self) -> &RegionMode {
        &self.mode
    }

    pub fn mode_label(&self) -> String {
        match &self.mode {
            RegionMode::Triangle => "triangle".into(),
            RegionMode::ClosureD2(nu) => format!("closure_d2/{}", nu.label()),
        }
    }

    /// Every constraint when the region is a polygon; `None` for an
    /// estimated `ν♯`.
    pub fn half_planes(&self) -> Option<Vec<HalfPlane>> {
        let mut hp = triangle_half_planes(self.d, self.beta);
        if let RegionMode::ClosureD2(nu) = &self.mode {
            let lines = nu.lines()?;
            for (i, (a, b)) in lines.into_iter().enumerate() {
                hp.push(HalfPlane::new(
                    n(1),
                    b - a - n(1),
                    half() - a * half(),
                    format!("nu_sharp_{i}"),
                ));
            }
        }
        Some(hp)
    }

    /// `(1/q) ν♯(q/2 - 1) + 1/p - 1/q - 1/2` for an estimated `ν♯`.
    fn estimated_constraint(&self, pt: ExponentPair) -> Result<f64> {
        let RegionMode::ClosureD2(nu) = &self.mode else { unreachable!() };
        let (x, y) = pt.to_f64();
        if y <= 0.0 {
            return Err(TypeSetError::InfiniteQ);
        }
        Ok(y * nu.eval(0.5 / y - 1.0)? + x - y - 0.5)
    }

    pub fn membership(&self, pt: ExponentPair) -> Result<Membership> {
        let mut values: Vec<(Number, f64)> = Vec::new();
        let polygonal = self.half_planes();
        let planes = polygonal.clone().unwrap_or_else(|| triangle_half_planes(self.d, self.beta));
        for h in &planes {
            values.push((h.value(pt), FLOAT_TOL));
        }
        if polygonal.is_none() {
            values.push((Number::float(self.estimated_constraint(pt)?), FLOAT_TOL));
        }
        let mut boundary = false;
        for (v, tol) in values {
            match v.cmp_tol(&n(0), tol) {
                Ordering::Greater => return Ok(Membership::Exterior),
                Ordering::Equal => boundary = true,
                Ordering::Less => {}
            }
        }
        Ok(if boundary { Membership::Boundary } else { Membership::Interior })
    }

    pub fn contains(&self, pt: ExponentPair) -> Result<bool> {
        Ok(self.membership(pt)? != Membership::Exterior)
    }

    /// Counterclockwise vertices starting at the origin, for polygonal modes.
    pub fn polygon(&self) -> Option<Vec<ExponentPair>> {
        let planes = self.half_planes()?;
        let mut poly = vec![
            vertex(n(0), n(0)),
            vertex(n(1), n(0)),
            vertex(n(1), n(1)),
            vertex(n(0), n(1)),
        ];
        for h in &planes {
            poly = clip(&poly, h);
            if poly.is_empty() {
                break;
            }
        }
        let poly = simplify(poly);
        if let Some(i) = poly.iter().position(|p| is_zero(p.inv_p) && is_zero(p.inv_q)) {
            let mut rotated = poly[i..].to_vec();
            rotated.extend_from_slice(&poly[..i]);
            return Some(rotated);
        }
        Some(poly)
    }

    /// Closed boundary polyline starting and ending at the origin with
    /// consecutive points at most `1/resolution` apart.
    pub fn closure_boundary(&self, resolution: u32) -> Result<Vec<BoundaryPoint>> {
        if resolution < 8 {
            return Err(TypeSetError::InvalidParameter(format!(
                "boundary resolution {resolution} < 8"
            )));
        }
        match self.polygon() {
            Some(poly) => Ok(self.polygon_boundary(&poly, resolution)),
            None => self.ray_boundary(resolution),
        }
    }

    fn polygon_boundary(&self, poly: &[ExponentPair], resolution: u32) -> Vec<BoundaryPoint> {
        let planes = self.half_planes().unwrap();
        let tight = |pt: ExponentPair| -> String {
            planes
                .iter()
                .filter(|h| is_zero(h.value(pt)))
                .map(|h| h.label.as_str())
                .collect::<Vec<_>>()
                .join("+")
        };
        let mut out = Vec::new();
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let (fa, fb) = (a.to_f64(), b.to_f64());
            let len = (fb.0 - fa.0).hypot(fb.1 - fa.1);
            let steps = ((len * resolution as f64).ceil() as i64).max(1);
            for s in 0..steps {
                let pt = a.add(b.sub(a).scale(Number::ratio(s, steps)));
                out.push(BoundaryPoint { point: pt, active_constraint: tight(pt) });
            }
        }
        if let Some(first) = out.first().cloned() {
            out.push(first);
        }
        out
    }

    /// Boundary of a convex region with an estimated `ν♯`: bisection along
    /// rays from an interior point, refined until neighbors are close.
    fn ray_boundary(&self, resolution: u32) -> Result<Vec<BoundaryPoint>> {
        let [_, p2, p3] = triangle_vertices(self.d, self.beta)?;
        let (p2, p3) = (p2.to_f64(), p3.to_f64());
        let center = ((p2.0 + p3.0) / 6.0, (p2.1 + p3.1) / 6.0);
        let tri = triangle_half_planes(self.d, self.beta);
        let tri_f: Vec<(f64, f64, f64)> =
            tri.iter().map(|h| (h.a.to_f64(), h.b.to_f64(), h.c.to_f64())).collect();
        let hit = |angle: f64| -> Result<(f64, f64)> {
            let (dx, dy) = (angle.cos(), angle.sin());
            let mut t_max = f64::INFINITY;
            for &(a, b, c) in &tri_f {
                let rate = a * dx + b * dy;
                if rate > 0.0 {
                    t_max = t_max.min((c - a * center.0 - b * center.1) / rate);
                }
            }
            let at = |t: f64| (center.0 + t * dx, (center.1 + t * dy).max(0.0));
            let g = |t: f64| -> Result<f64> {
                let (x, y) = at(t);
                if y <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                self.estimated_constraint(ExponentPair { inv_p: x.into(), inv_q: y.into() })
            };
            if g(t_max)? <= 0.0 {
                return Ok(at(t_max));
            }
            let (mut lo, mut hi) = (0.0, t_max);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if g(mid)? <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(at(lo))
        };
        let base = 8 * resolution as usize;
        let angles: Vec<f64> =
            (0..=base).map(|i| i as f64 * std::f64::consts::TAU / base as f64).collect();
        let mut pts: Vec<(f64, (f64, f64))> =
            angles.iter().map(|&a| Ok((a, hit(a)?))).collect::<Result<_>>()?;
        let gap = 1.0 / resolution as f64;
        for _ in 0..12 {
            let mut refined = Vec::with_capacity(pts.len() * 2);
            let mut changed = false;
            for w in pts.windows(2) {
                refined.push(w[0]);
                let (a, b) = (w[0].1, w[1].1);
                if (a.0 - b.0).hypot(a.1 - b.1) > gap {
                    let mid = 0.5 * (w[0].0 + w[1].0);
                    refined.push((mid, hit(mid)?));
                    changed = true;
                }
            }
            refined.push(*pts.last().unwrap());
            pts = refined;
            if !changed {
                break;
            }
        }
        Ok(pts
            .into_iter()
            .map(|(_, (x, y))| BoundaryPoint {
                point: ExponentPair { inv_p: x.into(), inv_q: y.into() },
                active_constraint: "estimated".into(),
            })
            .collect())
    }

    /// Polygon vertices as floats: exact for polygonal modes, a boundary
    /// polyline otherwise.
    pub fn outline_f64(&self) -> Result<Vec<(f64, f64)>> {
        match self.polygon() {
            Some(p) => Ok(p.iter().map(|v| v.to_f64()).collect()),
            None => {
                let mut b: Vec<(f64, f64)> =
                    self.closure_boundary(64)?.iter().map(|b| b.point.to_f64()).collect();
                b.pop();
                Ok(b)
            }
        }
    }

    /// Euclidean distance from `pt` to the region's boundary, with the sign
    /// of the membership: positive inside, negative outside.
    pub fn signed_distance(&self, pt: (f64, f64)) -> Result<f64> {
        let outline = self.outline_f64()?;
        let dist = distance_to_polyline(pt, &outline);
        let p = ExponentPair { inv_p: pt.0.into(), inv_q: pt.1.into() };
        let inside = match self.polygon() {
            Some(_) => self.contains(p)?,
            None => point_in_polygon(pt, &outline),
        };
        Ok(if inside { dist } else { -dist })
    }

    /// JSON dump of a polygonal region.
    pub fn dump(&self) -> Result<RegionDump> {
        let vertices = self.polygon().ok_or_else(|| {
            TypeSetError::Mode("an estimated region has no exact vertices".into())
        })?;
        let gamma = match &self.mode {
            RegionMode::ClosureD2(NuSharp::ClosedForm { gamma, .. }) => Some(gamma.to_string()),
            _ => None,
        };
        let names = vertices.iter().map(|v| self.vertex_name(*v)).collect();
        Ok(RegionDump {
            schema_version: SCHEMA_VERSION,
            d: self.d,
            beta: self.beta.to_string(),
            gamma,
            mode: self.mode_label(),
            vertices,
            names,
        })
    }

    fn vertex_name(&self, v: ExponentPair) -> String {
        let mut named: Vec<(&str, ExponentPair)> = Vec::new();
        if let Ok([p1, p2, p3]) = triangle_vertices(self.d, self.beta) {
            named.extend([("P1", p1), ("P2", p2), ("P3rad", p3)]);
        }
        if let RegionMode::ClosureD2(NuSharp::ClosedForm { beta, gamma }) = &self.mode {
            if let Ok([_, _, p4, p5]) = quadrangle_vertices_radial(*beta, *gamma) {
                named.extend([("P4rad", p4), ("P5rad", p5)]);
            }
        }
        named
            .iter()
            .find(|(_, p)| *p == v)
            .map(|(s, _)| s.to_string())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDump {
    pub schema_version: u32,
    pub d: u32,
    pub beta: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    pub mode: String,
    pub vertices: Vec<ExponentPair>,
    /// Named vertex each entry coincides with, or empty.
    pub names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub point: ExponentPair,
    /// Constraints tight at the point, joined by `+`.
    pub active_constraint: String,
}

/// Rows `inv_p, inv_q, active_constraint`.
pub fn boundary_to_csv(points: &[BoundaryPoint]) -> csv::Result<String> {
    artifacts::csv_string("region_boundary", |w| {
        w.write_record(["inv_p", "inv_q", "active_constraint"])?;
        for b in points {
            let (x, y) = b.point.to_f64();
            w.write_record([x.to_string(), y.to_string(), b.active_constraint.clone()])?;
        }
        Ok(())
    })
}

fn clip(poly: &[ExponentPair], h: &HalfPlane) -> Vec<ExponentPair> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (vp, vq) = (h.value(p), h.value(q));
        let (sp, sq) = (vp.sign(), vq.sign());
        if sp != Ordering::Greater {
            out.push(p);
        }
        if (sp == Ordering::Less && sq == Ordering::Greater)
            || (sp == Ordering::Greater && sq == Ordering::Less)
        {
            let t = vp / (vp - vq);
            out.push(p.add(q.sub(p).scale(t)));
        }
    }
    out
}

/// Drops repeated and collinear vertices.
fn simplify(poly: Vec<ExponentPair>) -> Vec<ExponentPair> {
    let mut pts: Vec<ExponentPair> = Vec::new();
    for p in poly {
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    while pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    let mut changed = true;
    while changed && pts.len() > 2 {
        changed = false;
        for i in 0..pts.len() {
            let k = pts.len();
            let (a, b, c) = (pts[(i + k - 1) % k], pts[i], pts[(i + 1) % k]);
            if is_zero(cross(a, b, c)) {
                pts.remove(i);
                changed = true;
                break;
            }
        }
    }
    pts
}

fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn distance_to_polyline(p: (f64, f64), closed: &[(f64, f64)]) -> f64 {
    (0..closed.len())
        .map(|i| distance_to_segment(p, closed[i], closed[(i + 1) % closed.len()]))
        .fold(f64::INFINITY, f64::min)
}

fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "in_T")]
    InT,
    #[serde(rename = "not_in_T")]
    NotInT,
    #[serde(rename = "unresolved")]
    Unresolved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Which case of the endpoint analysis decided the verdict.
    pub case: String,
}

fn verdict(v: Verdict, case: &str) -> Classification {
    Classification { verdict: v, case: case.into() }
}

fn strictly_inside(poly: &[ExponentPair], pt: ExponentPair) -> bool {
    let k = poly.len();
    k >= 3 && (0..k).all(|i| cross(poly[i], poly[(i + 1) % k], pt).sign() == Ordering::Greater)
}

/// Decides membership of `pt` in the (unclosed) radial type set from the
/// analytic profile of `E`, or reports that the question is open.
pub fn endpoint_classify(
    profile: Option<&AnalyticProfile>,
    d: u32,
    pt: ExponentPair,
) -> Result<Classification> {
    check_d(d)?;
    let Some(prof) = profile else {
        return Ok(verdict(Verdict::Unresolved, "no analytic profile: finiteness flags unknown"));
    };
    let (beta, gamma) = (prof.beta, prof.gamma);
    check_beta_gamma(beta, gamma)?;
    let tri = TypeRegion::triangle(d, beta)?;
    if tri.membership(pt)? == Membership::Exterior {
        return Ok(verdict(Verdict::NotInT, "outside the closed triangle"));
    }
    let [p1, p2, p3] = triangle_vertices(d, beta)?;
    let tri_poly = [p1, p3, p2];
    let beta_is_one = beta.cmp_tol(&n(1), FLOAT_TOL) == Ordering::Equal;
    let finite = prof.sup_delta_beta_n_finite;
    let (ip, iq) = (pt.inv_p, pt.inv_q);

    if d >= 3 {
        if !beta_is_one {
            if finite {
                return Ok(verdict(Verdict::InT, "d>=3, beta<1, sup delta^beta N finite: whole closed triangle"));
            }
            return Ok(if on_segment(pt, p2, p3, true) {
                verdict(Verdict::NotInT, "d>=3, beta<1, sup delta^beta N infinite: segment [P2,P3rad] excluded")
            } else {
                verdict(Verdict::InT, "d>=3, beta<1, sup delta^beta N infinite: triangle minus [P2,P3rad]")
            });
        }
        let dn = n(d as i64);
        if ip.cmp_tol(&((dn - n(1)) / dn), FLOAT_TOL) == Ordering::Less {
            return Ok(verdict(Verdict::InT, "d>=3, beta=1, 1/p < (d-1)/d"));
        }
        let Some(lambda) = prof.log_decay else {
            return Ok(verdict(
                Verdict::Unresolved,
                "d>=3, beta=1, 1/p = (d-1)/d: logarithmic covering condition unknown",
            ));
        };
        // sup δ (log 1/δ)^(q/d) N(E,δ) < ∞ iff q/d ≤ λ.
        let holds = !is_zero(iq) && 1.0 / (iq.to_f64() * d as f64) <= lambda + FLOAT_TOL;
        return Ok(if holds {
            verdict(Verdict::InT, "d>=3, beta=1, 1/p = (d-1)/d: logarithmic covering condition holds")
        } else {
            verdict(Verdict::NotInT, "d>=3, beta=1, 1/p = (d-1)/d: logarithmic covering condition fails")
        });
    }

    // d = 2
    if beta_is_one {
        if let Some(lambda) = prof.log_decay {
            if lambda < 1.0 {
                let ok = ip.cmp_tol(&half(), FLOAT_TOL) == Ordering::Less
                    && iq.cmp_tol(&ip, FLOAT_TOL) != Ordering::Greater
                    && ip.cmp_tol(&(n(2) * iq), FLOAT_TOL) != Ordering::Greater;
                return Ok(if ok {
                    verdict(Verdict::InT, "d=2, beta=1, sup delta log(1/delta) N infinite: p>2 and p<=q<=2p")
                } else {
                    verdict(Verdict::NotInT, "d=2, beta=1, sup delta log(1/delta) N infinite: needs p>2 and p<=q<=2p")
                });
            }
        }
    }
    let on_lower_edge = on_segment(pt, p1, p2, false);
    let excess = n(2) * gamma - beta - n(1);
    match excess.sign() {
        Ordering::Less => {
            if finite {
                return Ok(verdict(Verdict::InT, "d=2, 2gamma-beta<1, sup delta^beta N finite: whole closed triangle"));
            }
            if strictly_inside(&tri_poly, pt) || on_lower_edge {
                return Ok(verdict(Verdict::InT, "d=2, 2gamma-beta<1: interior of the closure and [P1,P2)"));
            }
            Ok(verdict(
                Verdict::Unresolved,
                "d=2, 2gamma-beta<1, sup delta^beta N infinite: type set is not the whole triangle; boundary point undecided",
            ))
        }
        Ordering::Equal => {
            if finite && !beta_is_one {
                return Ok(if pt == p3 {
                    verdict(Verdict::Unresolved, "d=2, 2gamma-beta=1, sup finite: P3rad left open")
                } else {
                    verdict(Verdict::InT, "d=2, 2gamma-beta=1, sup finite: triangle minus possibly P3rad")
                });
            }
            if !finite {
                return Ok(if on_segment(pt, p2, p3, true) {
                    verdict(Verdict::NotInT, "d=2, 2gamma-beta=1, sup infinite: segment [P2,P3rad] excluded")
                } else {
                    verdict(Verdict::InT, "d=2, 2gamma-beta=1, sup infinite: triangle minus [P2,P3rad]")
                });
            }
            if strictly_inside(&tri_poly, pt) || on_lower_edge {
                return Ok(verdict(Verdict::InT, "d=2, beta=1: interior of the closure and [P1,P2)"));
            }
            Ok(verdict(Verdict::Unresolved, "d=2, beta=1: boundary point undecided"))
        }
        Ordering::Greater => {
            let [_, _, p4, p5] = quadrangle_vertices_radial(beta, gamma)?;
            if on_segment(pt, p1, p4, false) {
                return Ok(verdict(Verdict::InT, "d=2, 2gamma-beta>1: segment [P1,P4rad)"));
            }
            if on_lower_edge {
                return Ok(verdict(Verdict::InT, "d=2: segment [P1,P2)"));
            }
            if strictly_inside(&[p1, p4, p5, p2], pt) {
                return Ok(verdict(Verdict::InT, "d=2, 2gamma-beta>1: interior of the radial quadrangle"));
            }
            if on_segment(pt, p2, p5, false) {
                return Ok(verdict(
                    Verdict::Unresolved,
                    "d=2, 2gamma-beta>1: segment [P2,P5rad) is an open question",
                ));
            }
            Ok(verdict(
                Verdict::Unresolved,
                "d=2, 2gamma-beta>1: closure only known to lie between the radial quadrangle and the triangle",
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> Number {
        Number::ratio(a, b)
    }

    fn pair(a: i64, b: i64, c: i64, e: i64) -> ExponentPair {
        ExponentPair::ratio(a, b, c, e)
    }

    fn exact_eq(p: ExponentPair, a: i64, b: i64, c: i64, e: i64) {
        assert_eq!(p.inv_p.as_ratio(), Some(Number::ratio(a, b).as_ratio().unwrap()), "{p:?}");
        assert_eq!(p.inv_q.as_ratio(), Some(Number::ratio(c, e).as_ratio().unwrap()), "{p:?}");
    }

    #[test]
    fn triangle_vertex_examples() {
        let [p1, p2, p3] = triangle_vertices(3, n(1)).unwrap();
        exact_eq(p1, 0, 1, 0, 1);
        exact_eq(p2, 2, 3, 2, 3);
        exact_eq(p3, 2, 3, 2, 9);
        let [_, p2, p3] = triangle_vertices(2, r(1, 2)).unwrap();
        exact_eq(p2, 2, 3, 2, 3);
        exact_eq(p3, 4, 7, 2, 7);
        let [_, p2, p3] = triangle_vertices(3, n(0)).unwrap();
        exact_eq(p2, 1, 1, 1, 1);
        exact_eq(p3, 3, 4, 1, 4);
        assert!(triangle_vertices(1, n(0)).is_err());
        assert!(triangle_vertices(2, r(3, 2)).is_err());
    }

    #[test]
    fn general_quadrangle_examples() {
        let [_, _, p3, p4] = quadrangle_vertices_general(2, n(1), n(1)).unwrap();
        exact_eq(p3, 1, 2, 1, 2);
        exact_eq(p4, 2, 5, 1, 5);
        let [_, _, p3, p4] = quadrangle_vertices_general(3, n(0), n(0)).unwrap();
        exact_eq(p3, 3, 4, 1, 4);
        exact_eq(p4, 3, 4, 1, 4);
        let [_, _, p3, p4] = quadrangle_vertices_general(2, r(1, 2), r(1, 2)).unwrap();
        exact_eq(p3, 3, 5, 2, 5);
        exact_eq(p4, 1, 2, 1, 4);
        assert!(quadrangle_vertices_general(2, r(1, 2), r(1, 3)).is_err());
    }

    #[test]
    fn radial_quadrangle_examples() {
        let [_, _, p4, p5] = quadrangle_vertices_radial(r(1, 2), n(1)).unwrap();
        exact_eq(p4, 1, 2, 1, 4);
        exact_eq(p5, 7, 12, 1, 3);
        let [_, _, p4, p5] = quadrangle_vertices_radial(n(0), n(1)).unwrap();
        exact_eq(p4, 1, 2, 1, 4);
        exact_eq(p5, 2, 3, 1, 3);
        let [_, _, p4, _] = quadrangle_vertices_radial(r(9, 10), n(1)).unwrap();
        exact_eq(p4, 1, 2, 1, 4);
        assert!(matches!(
            quadrangle_vertices_radial(r(1, 2), r(3, 4)),
            Err(TypeSetError::Case(_))
        ));
    }

    #[test]
    fn radial_vertices_degenerate_at_threshold() {
        // At γ = (1+β)/2, P5rad coincides with P3rad and P4rad lies on the
        // scaling line, as the limits of the vertex formulas.
        for (a, b) in [(1, 2), (1, 3), (2, 5)] {
            let beta = r(a, b);
            let gamma = (n(1) + beta) / n(2);
            let [_, _, p3] = triangle_vertices(2, beta).unwrap();
            // Evaluate the formulas directly: the constructor rejects equality.
            let rr = beta / gamma;
            let den = (n(1) - beta) + n(2) * (n(1) - rr);
            let p5 = vertex(
                ((n(1) - beta) * (n(2) - rr) + n(2) * (n(1) - rr)) / (n(2) * den),
                (n(1) - rr) / den,
            );
            assert_eq!(p5, p3);
            assert!(p5.is_exact());
            let p4 = vertex(n(1) / (n(1) + gamma), n(1) / (n(2) * (n(1) + gamma)));
            assert!(is_zero(p4.inv_p - n(2) * p4.inv_q));
        }
    }

    #[test]
    fn membership_examples() {
        let full = TypeRegion::closure_closed_form(n(1), n(1)).unwrap();
        assert_eq!(full.membership(pair(1, 3, 1, 4)).unwrap(), Membership::Interior);
        let reg = TypeRegion::closure_closed_form(r(1, 2), n(1)).unwrap();
        assert_eq!(reg.membership(pair(4, 7, 2, 7)).unwrap(), Membership::Exterior);
        let violated = reg
            .half_planes()
            .unwrap()
            .iter()
            .map(|h| h.value(pair(4, 7, 2, 7)))
            .map(|v| v.to_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((violated + 0.5 - 15.0 / 28.0).abs() < 1e-15);
        for reg in [full, reg, TypeRegion::triangle(3, r(1, 3)).unwrap()] {
            assert_eq!(reg.membership(pair(0, 1, 0, 1)).unwrap(), Membership::Boundary);
        }
        assert!(matches!(
            TypeRegion::closure_d2(3, n(1), NuSharp::Identity),
            Err(TypeSetError::Mode(_))
        ));
    }

    #[test]
    fn infinite_q_uses_asymptotic_slope() {
        let reg = TypeRegion::closure_closed_form(n(1), n(1)).unwrap();
        // Slope 1 at infinity: 1/2 + 1/p <= 1/2 forces 1/p = 0.
        assert_eq!(reg.membership(pair(0, 1, 0, 1)).unwrap(), Membership::Boundary);
        assert_eq!(reg.membership(pair(1, 10, 0, 1)).unwrap(), Membership::Exterior);
    }

    #[test]
    fn triangle_polygon_and_boundary() {
        let t = TypeRegion::triangle(3, n(0)).unwrap();
        let poly = t.polygon().unwrap();
        assert_eq!(poly.len(), 3);
        exact_eq(poly[0], 0, 1, 0, 1);
        exact_eq(poly[1], 3, 4, 1, 4);
        exact_eq(poly[2], 1, 1, 1, 1);
        let b = t.closure_boundary(100).unwrap();
        for v in &poly {
            assert!(b.iter().any(|p| p.point == *v));
        }
        for w in b.windows(2) {
            let (a, c) = (w[0].point.to_f64(), w[1].point.to_f64());
            assert!((a.0 - c.0).hypot(a.1 - c.1) <= 0.01 + 1e-12);
        }
        for p in &b {
            assert_eq!(t.membership(p.point).unwrap(), Membership::Boundary);
        }
        assert!(t.closure_boundary(7).is_err());
    }

    #[test]
    fn full_interval_closure_corners() {
        let reg = TypeRegion::closure_closed_form(n(1), n(1)).unwrap();
        let poly = reg.polygon().unwrap();
        assert_eq!(poly.len(), 3);
        exact_eq(poly[1], 1, 2, 1, 4);
        exact_eq(poly[2], 1, 2, 1, 2);
    }

    #[test]
    fn regular_closure_is_radial_quadrangle() {
        let reg = TypeRegion::closure_closed_form(r(1, 2), n(1)).unwrap();
        let poly = reg.polygon().unwrap();
        assert_eq!(poly.len(), 4);
        exact_eq(poly[1], 1, 2, 1, 4);
        exact_eq(poly[2], 7, 12, 1, 3);
        exact_eq(poly[3], 2, 3, 2, 3);
        let dump = reg.dump().unwrap();
        assert_eq!(dump.names, vec!["P1", "P4rad", "P5rad", "P2"]);
        let s = serde_json::to_string(&dump).unwrap();
        assert!(s.contains("\"vertices\":[[[0,1],[0,1]],[[1,2],[1,4]],[[7,12],[1,3]],[[2,3],[2,3]]]"), "{s}");
        let back: RegionDump = serde_json::from_str(&s).unwrap();
        assert_eq!(back, dump);
    }

    #[test]
    fn identity_nu_sharp_is_q_at_most_2p() {
        let reg = TypeRegion::closure_d2(2, n(0), NuSharp::Identity).unwrap();
        let h = reg.half_planes().unwrap();
        let nu = h.last().unwrap();
        for i in 0..=24 {
            for j in 1..=24 {
                let pt = pair(i, 24, j, 24);
                let tight = nu.value(pt).sign() != Ordering::Greater;
                assert_eq!(tight, i <= 2 * j, "{pt:?}");
            }
        }
    }

    #[test]
    fn signed_distance_signs() {
        let t = TypeRegion::triangle(2, n(1)).unwrap();
        assert!(t.signed_distance((0.3, 0.2)).unwrap() > 0.0);
        assert!(t.signed_distance((0.9, 0.1)).unwrap() < 0.0);
        assert!((t.signed_distance((0.5, 0.35)).unwrap()).abs() < 1e-12);
    }

    fn profile(beta: Number, gamma: Number, finite: bool) -> AnalyticProfile {
        AnalyticProfile::new(beta, gamma, finite, "test").unwrap()
    }

    #[test]
    fn classify_examples() {
        let b = Number::float(2f64.ln() / 3f64.ln());
        let cantor = profile(b, b, true);
        let [_, _, p3] = triangle_vertices(3, b).unwrap();
        assert_eq!(endpoint_classify(Some(&cantor), 3, p3).unwrap().verdict, Verdict::InT);
        let [_, _, p3] = triangle_vertices(2, b).unwrap();
        assert_eq!(endpoint_classify(Some(&cantor), 2, p3).unwrap().verdict, Verdict::InT);
        let full = profile(n(1), n(1), true).with_log_decay(0.0);
        assert_eq!(
            endpoint_classify(Some(&full), 2, pair(1, 2, 1, 4)).unwrap().verdict,
            Verdict::NotInT
        );
        assert_eq!(
            endpoint_classify(Some(&full), 2, pair(1, 3, 1, 4)).unwrap().verdict,
            Verdict::InT
        );
        assert_eq!(
            endpoint_classify(None, 2, pair(1, 3, 1, 4)).unwrap().verdict,
            Verdict::Unresolved
        );
    }

    #[test]
    fn classify_high_dim_cases() {
        let beta = r(1, 2);
        let [_, p2, p3] = triangle_vertices(3, beta).unwrap();
        let mid = p2.add(p3).scale(half());
        let inf = profile(beta, beta, false);
        assert_eq!(endpoint_classify(Some(&inf), 3, mid).unwrap().verdict, Verdict::NotInT);
        assert_eq!(endpoint_classify(Some(&inf), 3, pair(1, 3, 1, 4)).unwrap().verdict, Verdict::InT);
        assert_eq!(endpoint_classify(Some(&inf), 3, pair(9, 10, 1, 10)).unwrap().verdict, Verdict::NotInT);
        // β = 1, p = d/(d-1): q/d <= λ decides.
        let logp = profile(n(1), n(1), true).with_log_decay(1.0);
        assert_eq!(endpoint_classify(Some(&logp), 3, pair(2, 3, 1, 3)).unwrap().verdict, Verdict::InT);
        assert_eq!(endpoint_classify(Some(&logp), 3, pair(2, 3, 1, 4)).unwrap().verdict, Verdict::NotInT);
        let nolog = profile(n(1), n(1), true);
        assert_eq!(
            endpoint_classify(Some(&nolog), 3, pair(2, 3, 1, 3)).unwrap().verdict,
            Verdict::Unresolved
        );
        assert_eq!(endpoint_classify(Some(&nolog), 3, pair(1, 2, 1, 3)).unwrap().verdict, Verdict::InT);
    }

    #[test]
    fn classify_planar_open_cases() {
        let reg = profile(r(1, 2), n(1), true);
        let [_, p2, p4, p5] = quadrangle_vertices_radial(r(1, 2), n(1)).unwrap();
        let c = endpoint_classify(Some(&reg), 2, p2.add(p5).scale(half())).unwrap();
        assert_eq!(c.verdict, Verdict::Unresolved);
        assert!(c.case.contains("open question"));
        let c = endpoint_classify(Some(&reg), 2, p4.scale(half())).unwrap();
        assert_eq!(c.verdict, Verdict::InT);
        assert_eq!(endpoint_classify(Some(&reg), 2, p4).unwrap().verdict, Verdict::Unresolved);
        // 2γ - β = 1 with finite sup: only P3rad is open.
        let edge = profile(r(1, 2), r(3, 4), true);
        let [_, _, p3] = triangle_vertices(2, r(1, 2)).unwrap();
        assert_eq!(endpoint_classify(Some(&edge), 2, p3).unwrap().verdict, Verdict::Unresolved);
        assert_eq!(endpoint_classify(Some(&edge), 2, p2).unwrap().verdict, Verdict::InT);
        let edge_inf = profile(r(1, 2), r(3, 4), false);
        assert_eq!(endpoint_classify(Some(&edge_inf), 2, p2).unwrap().verdict, Verdict::NotInT);
    }
}
