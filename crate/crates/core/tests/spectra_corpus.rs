use radmax::dilation_sets::{DilationSet, Generator, WindowSpec};
use radmax::numeric::Number;
use radmax::spectra::*;

fn gen(g: Generator, n: u32) -> DilationSet {
    DilationSet::generate(&g, n).unwrap()
}

fn cantor(n: u32) -> DilationSet {
    gen(Generator::cantor_middle_thirds(), n)
}

fn regular(b: (i64, i64), g: (i64, i64), n: u32) -> DilationSet {
    gen(
        Generator::AssouadRegular { beta: Number::ratio(b.0, b.1), gamma: Number::ratio(g.0, g.1) },
        n,
    )
}

/// Brute force: does the ideal middle-thirds set meet `[lo, hi)`?
/// Recurses on ternary intervals until they fall inside or outside.
fn cantor_meets(lo: f64, hi: f64, a: f64, w: f64, depth: u32) -> bool {
    if a + w < lo || a >= hi {
        return false;
    }
    if depth == 0 {
        return true;
    }
    let t = w / 3.0;
    cantor_meets(lo, hi, a, t, depth - 1) || cantor_meets(lo, hi, a + 2.0 * t, t, depth - 1)
}

#[test]
fn cantor_cells_match_brute_force_scan() {
    let e = cantor(8);
    let h = 1.0 / 256.0;
    let brute: Vec<u32> = (0..256u32)
        .filter(|&j| {
            let lo = j as f64 * h;
            let hi = if j == 255 { 1.0 + 1e-12 } else { lo + h };
            cantor_meets(lo, hi, 0.0, 1.0, 14)
        })
        .collect();
    assert_eq!(e.cells(), brute.as_slice());
    let r = e.restrict(WindowSpec::new(1, 1).unwrap()).unwrap();
    let expect: Vec<u32> = brute.iter().copied().filter(|&j| j >= 128).collect();
    assert_eq!(r.cells(), expect.as_slice());
}

#[test]
fn cantor_ancestors_match_scan_of_depth_six_windows() {
    let e = cantor(12);
    let anc = e.ancestors(6).unwrap();
    let brute: Vec<u32> = (0..64u32)
        .filter(|&j| e.cells().iter().any(|&c| c >> 6 == j))
        .collect();
    assert_eq!(anc, brute);
}

#[test]
fn cantor_global_counts_bracket_ternary_counts() {
    let p = covering_profile(&cantor(12));
    let beta = 2f64.ln() / 3f64.ln();
    for (m, c) in p.global_counts().iter().enumerate() {
        let ideal = (m as f64 * beta).exp2();
        let r = *c as f64 / ideal;
        assert!((0.25..=4.0).contains(&r), "m={m} count={c} ideal={ideal}");
    }
}

#[test]
fn cantor_minkowski_slope() {
    let p = covering_profile(&cantor(18));
    let f = minkowski_estimate(&p, ScaleWindow::new(6, 18)).unwrap();
    assert!((f.slope - 2f64.ln() / 3f64.ln()).abs() < 0.03, "{f:?}");
}

#[test]
fn convex_sequence_spectrum_at_half() {
    let e = gen(Generator::ConvexSequence { beta: Number::ratio(1, 2) }, 20);
    let p = covering_profile(&e);
    let pts = assouad_spectrum_estimate(&p, &[0.0, 0.25, 0.5], ScaleWindow::default_for(20))
        .unwrap();
    assert!((pts[2].estimate - 1.0).abs() < 0.1, "{pts:?}");
}

#[test]
fn regular_nu_sharp_closed_form_at_half() {
    let p = covering_profile(&regular((1, 2), (1, 1), 22));
    let f = nu_sharp_estimate(&p, 0.5, ScaleWindow::default_for(22)).unwrap();
    assert!((f.slope - 0.75).abs() < 0.1, "{f:?}");
}

#[test]
fn regular_sets_realize_minkowski_dimension() {
    for (b, g, beta) in [((1, 2), (1, 1), 0.5), ((2, 5), (4, 5), 0.4)] {
        let e = regular(b, g, 22);
        let n = e.len() as f64;
        assert!((n.log2() - beta * 22.0).abs() <= 3.0, "{b:?} {n}");
        let f = minkowski_estimate(&covering_profile(&e), ScaleWindow::default_for(22)).unwrap();
        assert!((f.slope - beta).abs() < 0.05, "{f:?}");
    }
}

#[test]
fn fracprop_on_cantor_at_one() {
    let p = covering_profile(&cantor(20));
    let beta = 2f64.ln() / 3f64.ln();
    let r = fracprop_check(&p, beta, beta, &[1.0], 0.1, ScaleWindow::default_for(20)).unwrap();
    assert!(r.all_pass, "{r:?}");
    assert!((r.rows[0].estimate - 1.0).abs() < 0.1);
}

#[test]
fn fracprop_on_regular_grid() {
    let p = covering_profile(&regular((1, 2), (1, 1), 22));
    let grid: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
    let r = fracprop_check(&p, 0.5, 1.0, &grid, 0.1, ScaleWindow::default_for(22)).unwrap();
    assert!(r.all_pass, "{r:?}");
}

#[test]
fn nu_sharp_equals_minkowski_for_nonpositive_alpha() {
    for e in [cantor(20), regular((1, 2), (1, 1), 20)] {
        let p = covering_profile(&e);
        let w = ScaleWindow::default_for(20);
        let beta = minkowski_estimate(&p, w).unwrap().slope;
        for alpha in [-1.0, -0.3, 0.0] {
            let f = nu_sharp_estimate(&p, alpha, w).unwrap();
            assert!((f.slope - beta).abs() < 0.05, "{alpha}: {} vs {beta}", f.slope);
        }
    }
}

#[test]
fn minkowski_below_spectrum() {
    let grid = [0.0, 0.2, 0.4, 0.6, 0.8];
    for e in [
        cantor(18),
        regular((1, 2), (1, 1), 18),
        gen(Generator::ConvexSequence { beta: Number::ratio(1, 3) }, 18),
    ] {
        let p = covering_profile(&e);
        let w = ScaleWindow::default_for(18);
        let beta = minkowski_estimate(&p, w).unwrap().slope;
        for pt in assouad_spectrum_estimate(&p, &grid, w).unwrap() {
            assert!(beta <= pt.estimate + 0.05);
        }
    }
}

#[test]
fn omega_matches_window_scan_on_cantor() {
    let e = cantor(12);
    let p = covering_profile(&e);
    let (k, m) = (4u32, 6u32);
    let brute = (0..16u64)
        .filter_map(|pos| e.restrict(WindowSpec::new(k, pos).unwrap()).ok())
        .map(|s| s.covering_number(k + m).unwrap())
        .max()
        .unwrap() as f64;
    let expect = (-(k as f64) * (2.0 / 4.0 - 1.0 / 2.0)).exp2() * brute.powf(0.25);
    assert!((omega_mpq(&p, 2.0, 4.0, m, k).unwrap() - expect).abs() < 1e-12);
}
