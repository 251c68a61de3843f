use proptest::prelude::*;
use radmax::dilation_sets::{DilationSet, Generator, WindowSpec};
use radmax::experiments::*;
use radmax::numeric::Number;
use radmax::par::Exec;
use radmax::spectra::{CoveringProfile, ScaleWindow};

fn set(g: Generator, n: u32) -> DilationSet {
    DilationSet::generate(&g, n).unwrap()
}

fn cantor(n: u32) -> DilationSet {
    set(Generator::cantor_middle_thirds(), n)
}

fn regular(n: u32) -> DilationSet {
    set(Generator::AssouadRegular { beta: Number::ratio(1, 2), gamma: Number::one() }, n)
}

#[test]
fn pq_slopes_follow_prediction() {
    let e = cantor(12);
    for (d, p, q, tol) in [(3, 2.0, 3.0, 0.1), (2, 2.0, 2.0, 0.05), (2, 2.0, 4.0, 0.1)] {
        let r = experiment_pq(&e, d, p, q, (6, 13), Exec::Parallel).unwrap();
        assert!((r.fit.slope - r.predicted_slope).abs() <= tol, "{d} {p} {q}: {:?}", r.fit);
        assert_eq!(r.verdict, Verdict::Pass);
    }
}

#[test]
fn pq_decay_rate_grows_with_q_and_fits_track() {
    let e = set(Generator::FullInterval {}, 8);
    let mut last = f64::INFINITY;
    for q in [2.0, 2.5, 3.0, 4.0, 6.0] {
        let r = experiment_pq(&e, 2, 2.0, q, (6, 11), Exec::Parallel).unwrap();
        assert!(r.predicted_slope <= last);
        assert!((r.fit.slope - r.predicted_slope).abs() <= 0.15, "q={q}: {:?}", r.fit);
        last = r.predicted_slope;
    }
}

#[test]
fn pq_rejects_bad_ranges() {
    let e = cantor(8);
    assert!(experiment_pq(&e, 2, 3.0, 2.0, (6, 10), Exec::Sequential).is_err());
    assert!(experiment_pq(&e, 2, 2.0, 3.0, (5, 10), Exec::Sequential).is_err());
    assert!(experiment_pq(&e, 2, 2.0, 3.0, (6, 17), Exec::Sequential).is_err());
}

#[test]
fn knapp_on_full_interval() {
    let e = set(Generator::FullInterval {}, 12);
    let r = experiment_knapp(&e, 2, 4.0, 4.0, WindowSpec::root(), (4, 12), Exec::Parallel).unwrap();
    assert!((r.predicted_slope - 0.25).abs() < 1e-9);
    assert!(r.fit.slope <= 0.35, "{:?}", r.fit);
}

#[test]
fn knapp_on_single_point_has_no_covering_term() {
    // One dilation at distance 1/2 from the window's left end.
    let e = set(Generator::FinitePoints { points: vec![1.5] }, 12);
    for (p, q) in [(2.0, 3.0), (3.0, 3.0), (1.5, 4.0)] {
        let r = experiment_knapp(&e, 3, p, q, WindowSpec::root(), (4, 12), Exec::Parallel).unwrap();
        assert!((r.predicted_slope - (1.0 + 1.0 / q - 1.0 / p)).abs() < 1e-9);
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.fit);
    }
}

#[test]
fn knapp_on_cantor() {
    let r = experiment_knapp(&cantor(16), 2, 2.0, 4.0, WindowSpec::root(), (4, 12), Exec::Parallel)
        .unwrap();
    let beta = 2f64.ln() / 3f64.ln();
    let ideal = 0.5 + 0.25 - 0.5 - beta / 4.0;
    assert!((r.predicted_slope - ideal).abs() < 0.05, "{}", r.predicted_slope);
    assert!(r.fit.slope <= 0.2);
}

#[test]
fn knapp_guards() {
    let e = cantor(12);
    let w = WindowSpec::root();
    assert!(experiment_knapp(&e, 2, 1.5, 1.8, w, (4, 10), Exec::Sequential).is_err());
    assert!(experiment_knapp(&e, 2, 2.0, 4.0, w, (3, 10), Exec::Sequential).is_err());
    let fine = WindowSpec::new(6, 0).unwrap();
    assert!(experiment_knapp(&e, 2, 2.0, 4.0, fine, (4, 10), Exec::Sequential).is_err());
}

#[test]
fn annulus_ratio_is_stable() {
    let deltas: Vec<f64> = (4..=10).map(|m| (-(m as f64)).exp2()).collect();
    let offsets = [-0.1, -0.05, 0.0, 0.05, 0.1];
    for d in [2, 3] {
        let r = claim_annulus(d, 1.0, 1.5, &deltas, &offsets).unwrap();
        assert!(r.min_ratio > 0.0 && r.max_ratio <= 4.0 * r.min_ratio, "{d}: {r:?}");
    }
    let r = claim_annulus(2, 1.0, 1.5, &[1.0 / 64.0], &[0.0]).unwrap();
    assert_eq!(r.rows.len(), 1);
}

#[test]
fn stein_on_cantor() {
    let r = experiment_stein_log(&cantor(16), 3, 1.5, (6, 16), Exec::Parallel).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let norms: Vec<f64> = r.points.iter().map(|p| p.input_norm).collect();
    let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi <= 2.0 * lo);
}

#[test]
fn stein_on_point_recovers_log_exponent() {
    let e = set(Generator::FinitePoints { points: vec![1.25] }, 16);
    let r = experiment_stein_log(&e, 2, 2.0, (6, 16), Exec::Parallel).unwrap();
    let log_fit = r.auxiliary_fit.unwrap();
    assert!((log_fit.slope - 0.5).abs() <= 0.15, "{log_fit:?}");
}

#[test]
fn scan_matches_triangle_for_cantor() {
    let p = CoveringProfile::compute(&cantor(20), Exec::Parallel);
    let s = region_scan(&p, 3, 32, ScaleWindow::default_for(20), Exec::Parallel).unwrap();
    assert_eq!(s.rows.len(), 33 * 33);
    assert_eq!((s.missed_exclusions, s.false_exclusions), (0, 0));
    let csv = s.to_csv().unwrap();
    assert_eq!(
        csv.lines().nth(1).unwrap(),
        "inv_p,inv_q,exponent_easy,exponent_knapp,excluded,predicted_member"
    );
}

#[test]
fn scan_matches_closure_for_regular_set() {
    let p = CoveringProfile::compute(&regular(20), Exec::Parallel);
    let w = ScaleWindow::default_for(20);
    let s = region_scan(&p, 2, 32, w, Exec::Parallel).unwrap();
    assert_eq!((s.missed_exclusions, s.false_exclusions), (0, 0));
    // The triangle corner (4/7, 2/7) lies just outside the closure: its
    // annulus exponent is positive but below the exclusion threshold.
    let region = predicted_region(&p, 2, w).unwrap();
    assert!(region.signed_distance((4.0 / 7.0, 2.0 / 7.0)).unwrap() < 0.0);
    let (_, knapp) = scan_exponents(&p, 2, 4.0 / 7.0, 2.0 / 7.0, w).unwrap();
    assert!(knapp > 0.0 && knapp < EXCLUSION_THRESHOLD);
}

#[test]
fn scan_exclusions_grow_with_finer_scales() {
    let p = CoveringProfile::compute(&regular(20), Exec::Parallel);
    let coarse = region_scan(&p, 2, 16, ScaleWindow::new(5, 16), Exec::Parallel).unwrap();
    let fine = region_scan(&p, 2, 16, ScaleWindow::new(5, 20), Exec::Parallel).unwrap();
    for (a, b) in coarse.rows.iter().zip(&fine.rows) {
        assert!(!a.excluded || b.excluded, "{a:?} un-excluded");
    }
}

#[test]
fn records_round_trip_and_repeat() {
    let e = cantor(12);
    let a = experiment_pq(&e, 3, 2.0, 3.0, (6, 9), Exec::Parallel).unwrap();
    let b = experiment_pq(&e, 3, 2.0, 3.0, (6, 9), Exec::Sequential).unwrap();
    assert_eq!(a, b);
    let back: ExperimentRecord = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
    assert_eq!(back, a);
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    let k = experiment_knapp(&e, 2, 2.0, 4.0, WindowSpec::root(), (4, 8), Exec::Parallel).unwrap();
    let back: ExperimentRecord = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
    assert_eq!(back, k);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn growth_never_drops_when_scales_are_added(
        vals in proptest::collection::vec(-5.0f64..5.0, 10..20),
        cut in 8usize..10,
    ) {
        let a = growth_exponent(3, &vals[..cut]).unwrap();
        let b = growth_exponent(3, &vals).unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn scan_origin_never_excluded(depth in 10u32..16, d in 2u32..5) {
        let p = CoveringProfile::compute(&cantor(depth), Exec::Sequential);
        let (easy, knapp) = scan_exponents(&p, d, 0.0, 0.0, ScaleWindow::default_for(depth)).unwrap();
        prop_assert!(easy <= EXCLUSION_THRESHOLD && knapp <= EXCLUSION_THRESHOLD);
    }
}
