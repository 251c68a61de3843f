//! Globally adaptive Gauss–Kronrod quadrature (7/15 points) and an
//! endpoint-singular variant for integrands with inverse square-root
//! behaviour at both ends.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub fn zero() -> Self {
        QuadratureResult { value: 0.0, abs_error_estimate: 0.0, evaluations: 0 }
    }

    pub fn scaled(self, c: f64) -> Self {
        QuadratureResult {
            value: c * self.value,
            abs_error_estimate: c.abs() * self.abs_error_estimate,
            evaluations: self.evaluations,
        }
    }

    fn merge(self, o: QuadratureResult) -> Self {
        QuadratureResult {
            value: self.value + o.value,
            abs_error_estimate: self.abs_error_estimate + o.abs_error_estimate,
            evaluations: self.evaluations + o.evaluations,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not reach tolerance: best {best} with error estimate {err} after {evaluations} evaluations")]
    NotConverged { best: f64, err: f64, evaluations: usize },
    #[error("invalid integration request: {0}")]
    Invalid(String),
}

pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_9,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    resabs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err).then(o.a.total_cmp(&self.a))
    }
}

/// One 15-point Kronrod rule with the QUADPACK error estimate.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let (resk, resabs, resasc) = (resk * h, resabs * h.abs(), resasc * h.abs());
    let mut err = ((resk - resg * h).abs()).max(0.0);
    if resasc != 0.0 && err != 0.0 {
        err = resasc * f64::min(1.0, (200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (resk, err, resabs)
}

/// `∫_a^b f` to absolute tolerance `tol`, with `breakpoints` (inside
/// `(a,b)`) as forced subdivision points.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
    max_subdivisions: usize,
) -> Result<QuadratureResult, QuadratureError> {
    if !(a.is_finite() && b.is_finite()) || !(tol > 0.0) {
        return Err(QuadratureError::Invalid(format!("interval [{a}, {b}], tol {tol}")));
    }
    if a == b {
        return Ok(QuadratureResult::zero());
    }
    if a > b {
        return integrate(f, b, a, breakpoints, tol, max_subdivisions).map(|r| r.scaled(-1.0));
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in edges.windows(2) {
        let (value, err, resabs) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        heap.push(Segment { a: w[0], b: w[1], value, err, resabs });
    }
    let mut subdivisions = 0usize;
    loop {
        let total_err: f64 = heap.iter().map(|s| s.err).sum();
        // Below this, further bisection only reshuffles rounding error.
        let floor = 100.0 * f64::EPSILON * heap.iter().map(|s| s.resabs).sum::<f64>();
        if !total_err.is_finite() {
            let (best, _) = finish(heap);
            return Err(QuadratureError::NotConverged { best, err: total_err, evaluations });
        }
        if total_err <= tol.max(floor) {
            break;
        }
        if subdivisions >= max_subdivisions {
            let (best, _) = finish(heap);
            return Err(QuadratureError::NotConverged { best, err: total_err, evaluations });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval at machine resolution: keep its estimate as final.
            heap.push(Segment { err: 0.0, ..worst });
            continue;
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err, resabs) = gk15(&f, lo, hi);
            heap.push(Segment { a: lo, b: hi, value, err, resabs });
        }
        evaluations += 30;
        subdivisions += 1;
    }
    let (value, abs_error_estimate) = finish(heap);
    Ok(QuadratureResult { value, abs_error_estimate, evaluations })
}

/// Sum of segment values in order of position, independent of heap order.
fn finish(heap: BinaryHeap<Segment>) -> (f64, f64) {
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum();
    let err = segs.iter().map(|s| s.err).sum();
    (value, err)
}

/// `∫_a^b h(s, s-a, b-s) ds` for integrands that may blow up like
/// `(s-a)^(-1/2)` and `(b-s)^(-1/2)`.
///
/// The interval is split at its midpoint and `s = a + u²` (left half),
/// `s = b - u²` (right half) are substituted; the distances to both
/// endpoints are passed to `h` exactly so that no cancellation occurs near
/// them.
pub fn integrate_endpoint_singular(
    h: impl Fn(f64, f64, f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
    max_subdivisions: usize,
) -> Result<QuadratureResult, QuadratureError> {
    if !(a < b) {
        if a == b {
            return Ok(QuadratureResult::zero());
        }
        return Err(QuadratureError::Invalid(format!("interval [{a}, {b}]")));
    }
    let len = b - a;
    let mid = a + 0.5 * len;
    let umax = (0.5 * len).sqrt();
    let left_cuts: Vec<f64> =
        breakpoints.iter().filter(|&&c| c > a && c < mid).map(|&c| (c - a).sqrt()).collect();
    let right_cuts: Vec<f64> =
        breakpoints.iter().filter(|&&c| c > mid && c < b).map(|&c| (b - c).sqrt()).collect();
    let left = integrate(
        |u| {
            let u2 = u * u;
            2.0 * u * h(a + u2, u2, len - u2)
        },
        0.0,
        umax,
        &left_cuts,
        0.5 * tol,
        max_subdivisions,
    );
    let right = integrate(
        |u| {
            let u2 = u * u;
            2.0 * u * h(b - u2, len - u2, u2)
        },
        0.0,
        umax,
        &right_cuts,
        0.5 * tol,
        max_subdivisions,
    );
    match (left, right) {
        (Ok(l), Ok(r)) => Ok(l.merge(r)),
        (l, r) => {
            let part = |x: Result<QuadratureResult, QuadratureError>| match x {
                Ok(q) => (q.value, q.abs_error_estimate, q.evaluations),
                Err(QuadratureError::NotConverged { best, err, evaluations }) => {
                    (best, err, evaluations)
                }
                Err(_) => (f64::NAN, f64::INFINITY, 0),
            };
            let (lv, le, ln) = part(l);
            let (rv, re, rn) = part(r);
            Err(QuadratureError::NotConverged { best: lv + rv, err: le + re, evaluations: ln + rn })
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// Legendre recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
