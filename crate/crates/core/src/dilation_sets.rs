//! Dilation sets `E ⊂ [1,2]` stored as unions of dyadic cells.
//!
//! A set of depth `n` is the list of indices `j` of the cells
//! `[1 + j 2^-n, 1 + (j+1) 2^-n)` that meet the ideal set (the last cell is
//! closed at 2). Generators attach an [`AnalyticProfile`] with the dimensions
//! and finiteness flags known for the ideal set, which the endpoint
//! classification relies on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::Number;

pub const MAX_DEPTH: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("depth {0} outside [1, {MAX_DEPTH}]")]
    DepthOutOfRange(u32),
    #[error("scale {level} outside [0, {depth}]")]
    LevelOutOfRange { level: u32, depth: u32 },
    #[error("window does not meet the set")]
    EmptyWindow,
    #[error("invalid cell list: {0}")]
    InvalidCells(String),
}

/// Known analytic data of the ideal set a discretization came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticProfile {
    /// Upper Minkowski dimension.
    pub beta: Number,
    /// Quasi-Assouad (equivalently, for the generators here, Assouad) dimension.
    pub gamma: Number,
    /// Whether `sup_δ δ^β N(E,δ) < ∞`.
    #[serde(rename = "sup_delta_beta_N_finite")]
    pub sup_delta_beta_n_finite: bool,
    /// Exponent `λ` with `δ^β N(E,δ) ≍ (log 1/δ)^-λ`, when known. Only the
    /// β = 1 endpoint cases read it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_decay: Option<f64>,
    pub description: String,
}

impl AnalyticProfile {
    pub fn new(
        beta: Number,
        gamma: Number,
        sup_delta_beta_n_finite: bool,
        description: impl Into<String>,
    ) -> Result<Self, SetError> {
        let (b, g) = (beta.to_f64(), gamma.to_f64());
        if !(0.0..=1.0).contains(&b) || !(0.0..=1.0).contains(&g) || g < b - 1e-12 {
            return Err(SetError::InvalidParameter(format!(
                "profile needs 0 <= beta <= gamma <= 1, got beta={beta}, gamma={gamma}"
            )));
        }
        Ok(AnalyticProfile {
            beta,
            gamma,
            sup_delta_beta_n_finite,
            log_decay: None,
            description: description.into(),
        })
    }

    pub fn with_log_decay(mut self, lambda: f64) -> Self {
        self.log_decay = Some(lambda);
        self
    }
}

/// A dyadic window `J = [1 + position 2^-level, 1 + (position+1) 2^-level]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub level: u32,
    pub position: u64,
}

impl WindowSpec {
    pub fn new(level: u32, position: u64) -> Result<Self, SetError> {
        if level > 62 || position >= 1u64 << level {
            return Err(SetError::InvalidParameter(format!(
                "window position {position} out of range for level {level}"
            )));
        }
        Ok(WindowSpec { level, position })
    }

    pub fn root() -> Self {
        WindowSpec { level: 0, position: 0 }
    }

    pub fn left_endpoint(&self) -> f64 {
        1.0 + self.position as f64 / (1u64 << self.level) as f64
    }

    pub fn length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }
}

/// Generator descriptor; serializes as `{"generator": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", content = "params", rename_all = "snake_case")]
pub enum Generator {
    FullInterval {},
    FinitePoints { points: Vec<f64> },
    Cantor { base: u32, digits: Vec<u32> },
    ConvexSequence { beta: Number },
    AssouadRegular { beta: Number, gamma: Number },
}

impl Generator {
    pub fn cantor_middle_thirds() -> Self {
        Generator::Cantor { base: 3, digits: vec![0, 2] }
    }

    /// Short human-readable label, used in experiment records.
    pub fn label(&self) -> String {
        match self {
            Generator::FullInterval {} => "full_interval".into(),
            Generator::FinitePoints { points } => format!("finite_points({} pts)", points.len()),
            Generator::Cantor { base, digits } => format!("cantor(base {base}, digits {digits:?})"),
            Generator::ConvexSequence { beta } => format!("convex_sequence({beta})"),
            Generator::AssouadRegular { beta, gamma } => {
                format!("assouad_regular({beta}, {gamma})")
            }
        }
    }
}

/// JSON set specification: `{"generator": ..., "params": {...}, "depth": n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSpec {
    #[serde(flatten)]
    pub generator: Generator,
    pub depth: u32,
}

impl SetSpec {
    pub fn build(&self) -> Result<DilationSet, SetError> {
        DilationSet::generate(&self.generator, self.depth)
    }
}

#[derive(Deserialize)]
struct RawDilationSet {
    depth: u32,
    cells: Vec<u32>,
    #[serde(default)]
    profile: Option<AnalyticProfile>,
    #[serde(default)]
    members: Option<Vec<f64>>,
}

impl TryFrom<RawDilationSet> for DilationSet {
    type Error = SetError;
    fn try_from(raw: RawDilationSet) -> Result<Self, SetError> {
        let mut set = DilationSet::from_cells(raw.depth, raw.cells, raw.profile)?;
        if let Some(members) = raw.members {
            set = set.with_members(members)?;
        }
        Ok(set)
    }
}

/// Nonempty union of depth-`n` dyadic cells in `[1,2]`. Immutable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDilationSet")]
pub struct DilationSet {
    depth: u32,
    cells: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<AnalyticProfile>,
    /// Points of the ideal set known at the native resolution, when the
    /// generator can produce them.
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<Vec<f64>>,
}

fn check_depth(depth: u32) -> Result<(), SetError> {
    if (1..=MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(SetError::DepthOutOfRange(depth))
    }
}

impl DilationSet {
    /// Validates a raw cell list: nonempty, strictly increasing, in range.
    pub fn from_cells(
        depth: u32,
        cells: Vec<u32>,
        profile: Option<AnalyticProfile>,
    ) -> Result<Self, SetError> {
        check_depth(depth)?;
        if cells.is_empty() {
            return Err(SetError::InvalidCells("empty dilation set".into()));
        }
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SetError::InvalidCells(
                "cells must be strictly increasing".into(),
            ));
        }
        let limit = 1u64 << depth;
        if u64::from(*cells.last().unwrap()) >= limit {
            return Err(SetError::InvalidCells(format!(
                "cell index out of range for depth {depth}"
            )));
        }
        Ok(DilationSet { depth, cells, profile, members: None })
    }

    pub fn generate(generator: &Generator, depth: u32) -> Result<Self, SetError> {
        check_depth(depth)?;
        let (cells, profile, members) = match generator {
            Generator::FullInterval {} => (
                (0..1u32 << depth).collect(),
                AnalyticProfile::new(Number::one(), Number::one(), true, "full interval [1,2]")?
                    .with_log_decay(0.0),
                None,
            ),
            Generator::FinitePoints { points } => finite_points(points, depth)?,
            Generator::Cantor { base, digits } => cantor(*base, digits, depth)?,
            Generator::ConvexSequence { beta } => convex_sequence(*beta, depth)?,
            Generator::AssouadRegular { beta, gamma } => assouad_regular(*beta, *gamma, depth)?,
        };
        let set = DilationSet { depth, cells, profile: Some(profile), members: None };
        match members {
            Some(m) => set.with_members(m),
            None => Ok(set),
        }
    }

    /// Attaches known points of the ideal set. Each must lie in a (closed)
    /// cell of the set.
    pub fn with_members(mut self, mut members: Vec<f64>) -> Result<Self, SetError> {
        members.sort_by(f64::total_cmp);
        members.dedup();
        if members.is_empty() {
            return Err(SetError::InvalidCells("empty member list".into()));
        }
        if let Some(x) = members.iter().find(|&&x| !self.covers(x)) {
            return Err(SetError::InvalidCells(format!("member {x} not covered by the cells")));
        }
        self.members = Some(members);
        Ok(self)
    }

    pub fn members(&self) -> Option<&[f64]> {
        self.members.as_deref()
    }

    /// Whether `x` lies in the closed union of the cells.
    pub fn covers(&self, x: f64) -> bool {
        if !(1.0..=2.0).contains(&x) {
            return false;
        }
        let j = cell_of(x - 1.0, self.depth);
        let hit = |c: u32| self.cells.binary_search(&c).is_ok();
        hit(j) || (j > 0 && self.cell_bounds(j).0 == x && hit(j - 1))
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn profile(&self) -> Option<&AnalyticProfile> {
        self.profile.as_ref()
    }

    pub fn cell_width(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    /// Endpoints of cell `j` as reals in `[1,2]`.
    pub fn cell_bounds(&self, j: u32) -> (f64, f64) {
        let h = self.cell_width();
        (1.0 + j as f64 * h, 1.0 + (j as f64 + 1.0) * h)
    }

    /// `E ∩ J` at the same depth.
    pub fn restrict(&self, window: WindowSpec) -> Result<DilationSet, SetError> {
        if window.level > self.depth {
            return Err(SetError::LevelOutOfRange { level: window.level, depth: self.depth });
        }
        let shift = self.depth - window.level;
        let lo = window.position << shift;
        let hi = (window.position + 1) << shift;
        let start = self.cells.partition_point(|&c| u64::from(c) < lo);
        let end = self.cells.partition_point(|&c| u64::from(c) < hi);
        if start == end {
            return Err(SetError::EmptyWindow);
        }
        let cells = self.cells[start..end].to_vec();
        let mut out =
            DilationSet { depth: self.depth, cells, profile: self.profile.clone(), members: None };
        if let Some(ms) = &self.members {
            let kept: Vec<f64> = ms.iter().copied().filter(|&x| out.covers(x)).collect();
            if !kept.is_empty() {
                out.members = Some(kept);
            }
        }
        Ok(out)
    }

    /// Distinct depth-`m` cells containing a cell of the set, ascending.
    pub fn ancestors(&self, m: u32) -> Result<Vec<u32>, SetError> {
        if m > self.depth {
            return Err(SetError::LevelOutOfRange { level: m, depth: self.depth });
        }
        let shift = self.depth - m;
        let mut out: Vec<u32> = Vec::new();
        for &c in &self.cells {
            let a = c >> shift;
            if out.last() != Some(&a) {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// Canonical covering number `N(E, 2^-m)`.
    pub fn covering_number(&self, m: u32) -> Result<usize, SetError> {
        self.ancestors(m).map(|a| a.len())
    }

    /// The same set discretized at a coarser depth `m ≥ 1`.
    pub fn coarsen(&self, m: u32) -> Result<DilationSet, SetError> {
        check_depth(m)?;
        let cells = self.ancestors(m)?;
        Ok(DilationSet {
            depth: m,
            cells,
            profile: self.profile.clone(),
            members: self.members.clone(),
        })
    }

    /// Candidate dilations for discretized suprema: the known members when
    /// the generator supplied them, otherwise every cell's endpoints and
    /// center. Ascending, without duplicates.
    pub fn sample_dilations(&self) -> Vec<f64> {
        if let Some(ms) = &self.members {
            return ms.clone();
        }
        let h = self.cell_width();
        let mut ts = Vec::with_capacity(2 * self.cells.len() + 1);
        for &c in &self.cells {
            let lo = 1.0 + c as f64 * h;
            if ts.last().is_none_or(|&t: &f64| t < lo) {
                ts.push(lo);
            }
            ts.push(lo + 0.5 * h);
            ts.push(lo + h);
        }
        ts
    }
}

fn cell_of(offset: f64, depth: u32) -> u32 {
    let n = 1u64 << depth;
    let j = (offset * n as f64).floor();
    (j.max(0.0) as u64).min(n - 1) as u32
}

type Generated = (Vec<u32>, AnalyticProfile, Option<Vec<f64>>);

fn finite_points(points: &[f64], depth: u32) -> Result<Generated, SetError> {
    if points.is_empty() {
        return Err(SetError::InvalidParameter("finite_points needs at least one point".into()));
    }
    if let Some(x) = points.iter().find(|x| !(1.0..=2.0).contains(*x)) {
        return Err(SetError::InvalidParameter(format!("point {x} outside [1,2]")));
    }
    let mut cells: Vec<u32> = points.iter().map(|x| cell_of(x - 1.0, depth)).collect();
    cells.sort_unstable();
    cells.dedup();
    let profile = AnalyticProfile::new(Number::zero(), Number::zero(), true, "finite point set")?;
    Ok((cells, profile, Some(points.to_vec())))
}

/// `1 + {Σ d_i b^-i : d_i ∈ digits}`, marked exactly with integer arithmetic.
///
/// Once a b-adic piece is shorter than a cell it spans at most two cells,
/// and those containing its leftmost and rightmost points (both in the
/// set) are exactly the cells it meets.
fn cantor(base: u32, digits: &[u32], depth: u32) -> Result<Generated, SetError> {
    if !(2..=64).contains(&base) {
        return Err(SetError::InvalidParameter(format!("cantor base {base} outside [2, 64]")));
    }
    let mut ds = digits.to_vec();
    ds.sort_unstable();
    ds.dedup();
    if ds.is_empty() || ds.len() != digits.len() || *ds.last().unwrap() >= base {
        return Err(SetError::InvalidParameter(format!(
            "cantor digits must be distinct values in [0, {base}), got {digits:?}"
        )));
    }
    let beta = if ds.len() == 1 {
        Number::zero()
    } else if ds.len() as u32 == base {
        Number::one()
    } else {
        Number::float((ds.len() as f64).ln() / (base as f64).ln())
    };
    let profile = AnalyticProfile::new(
        beta,
        beta,
        true,
        format!("self-similar set, base {base}, digits {ds:?}"),
    )?;
    if ds.len() as u32 == base {
        return Ok(((0..1u32 << depth).collect(), profile.with_log_decay(0.0), None));
    }

    let b = u128::from(base);
    let two_n = 1u128 << depth;
    let (dmin, dmax) = (u128::from(ds[0]), u128::from(*ds.last().unwrap()));
    let mut cells = Vec::new();
    let mut members = Vec::new();
    // Depth-first over b-adic pieces (prefix value, b^level).
    let mut stack: Vec<(u128, u128)> = vec![(0, 1)];
    while let Some((prefix, scale)) = stack.pop() {
        if scale > two_n {
            for d in [dmin, dmax] {
                // x = (prefix (b-1) + d) / (scale (b-1))
                let num = (prefix * (b - 1) + d) * two_n;
                let den = scale * (b - 1);
                cells.push((num / den).min(two_n - 1) as u32);
                members.push(1.0 + (prefix * (b - 1) + d) as f64 / den as f64);
            }
            continue;
        }
        for &d in ds.iter().rev() {
            stack.push((prefix * b + u128::from(d), scale * b));
        }
    }
    cells.sort_unstable();
    cells.dedup();
    Ok((cells, profile, Some(members)))
}

/// Closure of `{1 + k^(1 - 1/β) : k ≥ 1}`.
///
/// Members are every term while consecutive terms are at least a cell
/// apart, then the largest term in each cell below, then the limit 1.
fn convex_sequence(beta: Number, depth: u32) -> Result<Generated, SetError> {
    let b = beta.to_f64();
    if !(b > 0.0 && b < 1.0) {
        return Err(SetError::InvalidParameter(format!(
            "convex_sequence needs beta in (0,1), got {beta}"
        )));
    }
    let s = 1.0 / b - 1.0;
    let h = (-(depth as f64)).exp2();
    let mut cells = vec![0u32];
    let mut members = vec![1.0];
    let mut k = 1.0f64;
    loop {
        let x = k.powf(-s);
        if x < h {
            break;
        }
        let c = cell_of(x, depth);
        cells.push(c);
        members.push(1.0 + x);
        // Once consecutive terms are closer than a cell, every cell down to
        // the accumulation point is hit.
        if x - (k + 1.0).powf(-s) < h {
            cells.extend(0..c);
            for j in 0..c {
                let top = (j as f64 + 1.0) * h;
                let x = top.powf(-1.0 / s).ceil().powf(-s);
                if x >= j as f64 * h && x <= top {
                    members.push(1.0 + x);
                }
            }
            break;
        }
        k += 1.0;
    }
    cells.sort_unstable();
    cells.dedup();
    let profile = AnalyticProfile::new(
        beta,
        Number::one(),
        true,
        format!("convex sequence 1 + n^(1 - 1/{beta})"),
    )?;
    Ok((cells, profile, Some(members)))
}

/// Set with window counts `≈ 2^min(γ(m-k), βm)` for every window level `k`
/// and scale `m`.
///
/// The accumulation point 1 carries a spine of dyadic nodes `[1, 1 + 2^-k]`.
/// The right child of the spine node at depth `k` roots a branch that
/// doubles at rate γ (at relative level `i` iff `⌊γi⌋ > ⌊γ(i-1)⌋`) until
/// depth `⌈k / (1 - β/γ)⌉` and keeps its left child below that.
fn assouad_regular(
    beta: Number,
    gamma: Number,
    depth: u32,
) -> Result<Generated, SetError> {
    let (b, g) = (beta.to_f64(), gamma.to_f64());
    if !(b > 0.0 && b <= g + 1e-15 && g <= 1.0) {
        return Err(SetError::InvalidParameter(format!(
            "assouad_regular needs 0 < beta <= gamma <= 1, got beta={beta}, gamma={gamma}"
        )));
    }
    let n = depth;
    let ratio = b / g;
    let mut cells: Vec<u32> = vec![0];
    for k in 0..n {
        let freeze = if ratio >= 1.0 - 1e-12 {
            n
        } else {
            ((k as f64 / (1.0 - ratio)).ceil() as u32).min(n)
        };
        let mut nodes: Vec<u32> = vec![1u32 << (n - k - 1)];
        for lvl in k + 1..n {
            let i = (lvl - k) as f64;
            if lvl < freeze && (g * i).floor() > (g * (i - 1.0)).floor() {
                let w = 1u32 << (n - lvl - 1);
                nodes = nodes.iter().flat_map(|&a| [a, a + w]).collect();
            }
        }
        cells.extend(nodes);
    }
    cells.sort_unstable();
    cells.dedup();
    let profile = AnalyticProfile::new(
        beta,
        gamma,
        true,
        format!("({beta},{gamma})-Assouad regular spine set"),
    )?;
    Ok((cells, profile, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(n: u32) -> DilationSet {
        DilationSet::generate(&Generator::FullInterval {}, n).unwrap()
    }

    #[test]
    fn full_interval_has_every_cell() {
        let e = full(3);
        assert_eq!(e.cells(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        let p = e.profile().unwrap();
        assert_eq!(p.beta.as_ratio(), Some((1, 1)));
        assert_eq!(p.gamma.as_ratio(), Some((1, 1)));
    }

    #[test]
    fn single_point_in_first_cell() {
        let e = DilationSet::generate(&Generator::FinitePoints { points: vec![1.0] }, 4).unwrap();
        assert_eq!(e.cells(), &[0]);
        assert_eq!(e.profile().unwrap().beta.to_f64(), 0.0);
        let two = DilationSet::generate(&Generator::FinitePoints { points: vec![2.0] }, 4).unwrap();
        assert_eq!(two.cells(), &[15]);
    }

    #[test]
    fn dyadic_point_marks_one_cell() {
        let e = DilationSet::generate(&Generator::FinitePoints { points: vec![1.5, 1.5] }, 5)
            .unwrap();
        assert_eq!(e.cells(), &[16]);
    }

    #[test]
    fn restrict_examples() {
        let e = full(3);
        let r = e.restrict(WindowSpec::new(1, 0).unwrap()).unwrap();
        assert_eq!(r.cells(), &[0, 1, 2, 3]);
        let single = DilationSet::from_cells(4, vec![0], None).unwrap();
        assert_eq!(
            single.restrict(WindowSpec::new(2, 3).unwrap()),
            Err(SetError::EmptyWindow)
        );
        assert!(matches!(
            single.restrict(WindowSpec::new(5, 0).unwrap()),
            Err(SetError::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn ancestors_examples() {
        assert_eq!(full(5).ancestors(2).unwrap(), vec![0, 1, 2, 3]);
        let two = DilationSet::from_cells(5, vec![0, 31], None).unwrap();
        assert_eq!(two.ancestors(0).unwrap(), vec![0]);
        assert!(two.ancestors(6).is_err());
    }

    #[test]
    fn depth_and_parameter_errors() {
        assert_eq!(
            DilationSet::generate(&Generator::FullInterval {}, 0),
            Err(SetError::DepthOutOfRange(0))
        );
        assert_eq!(
            DilationSet::generate(&Generator::FullInterval {}, 31),
            Err(SetError::DepthOutOfRange(31))
        );
        for g in [
            Generator::ConvexSequence { beta: Number::one() },
            Generator::AssouadRegular { beta: Number::ratio(3, 4), gamma: Number::ratio(1, 2) },
            Generator::AssouadRegular { beta: Number::zero(), gamma: Number::ratio(1, 2) },
            Generator::Cantor { base: 3, digits: vec![0, 3] },
            Generator::Cantor { base: 3, digits: vec![] },
            Generator::FinitePoints { points: vec![] },
            Generator::FinitePoints { points: vec![2.5] },
        ] {
            assert!(
                matches!(DilationSet::generate(&g, 8), Err(SetError::InvalidParameter(_))),
                "{g:?}"
            );
        }
    }

    #[test]
    fn invalid_cell_lists_rejected() {
        assert!(DilationSet::from_cells(3, vec![], None).is_err());
        assert!(DilationSet::from_cells(3, vec![2, 1], None).is_err());
        assert!(DilationSet::from_cells(3, vec![1, 1], None).is_err());
        assert!(DilationSet::from_cells(3, vec![8], None).is_err());
    }

    #[test]
    fn cantor_full_digits_is_full_interval() {
        let e = DilationSet::generate(&Generator::Cantor { base: 3, digits: vec![0, 1, 2] }, 6)
            .unwrap();
        assert_eq!(e.len(), 64);
    }

    #[test]
    fn convex_sequence_contains_accumulation_and_top() {
        let e = DilationSet::generate(&Generator::ConvexSequence { beta: Number::ratio(1, 2) }, 10)
            .unwrap();
        assert_eq!(e.cells()[0], 0);
        assert_eq!(*e.cells().last().unwrap(), 1023);
        // 1 + 1/2 sits at the start of cell 512; 1 + 1/3 inside cell 341.
        assert!(e.cells().contains(&512));
        assert!(e.cells().contains(&341));
        assert!(!e.cells().contains(&700));
    }

    #[test]
    fn assouad_regular_equal_dims_has_branch_everywhere() {
        let e = DilationSet::generate(
            &Generator::AssouadRegular { beta: Number::one(), gamma: Number::one() },
            8,
        )
        .unwrap();
        assert_eq!(e.len(), 256);
    }

    #[test]
    fn sample_dilations_cover_cells() {
        let e = DilationSet::from_cells(2, vec![1, 2], None).unwrap();
        assert_eq!(e.sample_dilations(), vec![1.25, 1.375, 1.5, 1.625, 1.75]);
    }

    #[test]
    fn generated_members_lie_in_cells_and_nest() {
        for g in [
            Generator::cantor_middle_thirds(),
            Generator::Cantor { base: 5, digits: vec![1, 3] },
            Generator::ConvexSequence { beta: Number::ratio(1, 2) },
        ] {
            let coarse = DilationSet::generate(&g, 7).unwrap();
            let fine = DilationSet::generate(&g, 8).unwrap();
            let fine_ms = fine.members().unwrap();
            for x in coarse.members().unwrap() {
                assert!(coarse.covers(*x));
                if matches!(g, Generator::Cantor { .. }) {
                    assert!(fine_ms.contains(x), "{g:?}: {x}");
                }
            }
        }
        // Endpoints of the first ternary pieces shorter than a depth-1 cell.
        let e = DilationSet::generate(&Generator::cantor_middle_thirds(), 1).unwrap();
        assert_eq!(e.members().unwrap(), &[1.0, 1.0 + 1.0 / 3.0, 1.0 + 2.0 / 3.0, 2.0]);
    }

    #[test]
    fn members_survive_json_round_trip() {
        let e = DilationSet::generate(&Generator::cantor_middle_thirds(), 6).unwrap();
        let back: DilationSet = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
        assert!(DilationSet::from_cells(3, vec![0], None).unwrap().with_members(vec![1.9]).is_err());
    }

    #[test]
    fn coarsen_matches_ancestors() {
        let e = DilationSet::generate(&Generator::cantor_middle_thirds(), 10).unwrap();
        let c = e.coarsen(6).unwrap();
        assert_eq!(c.cells(), e.ancestors(6).unwrap().as_slice());
        assert_eq!(c.depth(), 6);
    }
}
