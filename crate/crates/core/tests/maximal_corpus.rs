use proptest::prelude::*;
use radmax::dilation_sets::{DilationSet, Generator};
use radmax::maximal_ops::*;
use radmax::numeric::Number;
use radmax::par::Exec;
use radmax::radial_averages::RadialFunction;

fn set(g: &Generator, n: u32) -> DilationSet {
    DilationSet::generate(g, n).unwrap()
}

fn generators() -> Vec<Generator> {
    vec![
        Generator::FullInterval {},
        Generator::cantor_middle_thirds(),
        Generator::ConvexSequence { beta: Number::ratio(1, 2) },
    ]
}

fn corpus_functions() -> Vec<RadialFunction> {
    vec![
        RadialFunction::indicator(0.0, 10.0),
        RadialFunction::indicator(0.2, 0.6),
        RadialFunction::SmoothBump { center: 1.5, width: 0.2 },
        RadialFunction::indicator(2.0, 2.1),
    ]
}

fn max_ratio(e: &DilationSet, f: &RadialFunction, g: &RadialGrid) -> f64 {
    domination_check(e, f, 2.0, g, 1e-9, Exec::Parallel).unwrap().max_ratio.unwrap()
}

#[test]
fn domination_ratio_bounded_and_stable() {
    for d in [2, 3] {
        for gen in generators() {
            for f in corpus_functions() {
                let e = set(&gen, 6);
                let g = RadialGrid::for_function(&f, d, 5.0, 40).unwrap();
                let base = max_ratio(&e, &f, &g);
                let finer_grid = max_ratio(&e, &f, &g.refined());
                let deeper = max_ratio(&set(&gen, 8), &f, &g);
                assert!(base.is_finite() && base <= 10.0, "d={d} {f:?}: {base}");
                for other in [finer_grid, deeper] {
                    assert!(other / base <= 2.0 && base / other <= 2.0, "{base} vs {other}");
                }
            }
        }
    }
}

#[test]
fn domination_on_cantor_with_constant_function() {
    let e = set(&Generator::cantor_middle_thirds(), 8);
    let f = RadialFunction::indicator(0.0, 10.0);
    let g = RadialGrid::for_function(&f, 3, 8.0, 64).unwrap();
    let r = max_ratio(&e, &f, &g);
    assert!(r.is_finite() && r <= 10.0);
}

#[test]
fn smooth_bump_planar_ratio_stable_under_grid_refinement() {
    let e = set(&Generator::FullInterval {}, 6);
    let f = RadialFunction::SmoothBump { center: 1.5, width: 0.2 };
    let g = RadialGrid::for_function(&f, 2, 4.0, 32).unwrap();
    let (a, b) = (max_ratio(&e, &f, &g), max_ratio(&e, &f, &g.refined()));
    assert!(a / b <= 2.0 && b / a <= 2.0);
}

#[test]
fn maximal_value_grows_under_refinement() {
    let fs = corpus_functions();
    for gen in [Generator::FullInterval {}, Generator::cantor_middle_thirds()] {
        for f in &fs {
            for r in [0.3, 0.9, 1.7, 3.1] {
                let mut prev = 0.0;
                for n in 3..=8 {
                    let v = maximal_value_only(&set(&gen, n), f, 3, r, 1e-11).unwrap();
                    assert!(v >= prev - 1e-9, "{gen:?} n={n} r={r}: {v} < {prev}");
                    prev = v;
                }
            }
        }
    }
}

#[test]
fn pieces_are_exactly_homogeneous() {
    let e = set(&Generator::cantor_middle_thirds(), 6);
    for d in [2, 3, 4] {
        for f in corpus_functions() {
            for lambda in [0.37, 5.0, 1e3] {
                let g = f.clone().scaled(lambda);
                for r in [0.4, 1.1, 2.6] {
                    let a = maximal_value_only(&e, &f, d, r, 1e-10).unwrap();
                    let b = maximal_value_only(&e, &g, d, r, 1e-10).unwrap();
                    assert!((b - lambda * a).abs() <= 1e-12 * b.abs().max(1e-300));
                    let pa = decomposition_pieces(&e, &f, d, 1.5, r, 1e-10).unwrap().named();
                    let pb = decomposition_pieces(&e, &g, d, 1.5, r, 1e-10).unwrap().named();
                    for ((_, x), (_, y)) in pa.iter().zip(&pb) {
                        assert!(*x >= 0.0);
                        assert!((y - lambda * x).abs() <= 1e-12 * y.abs().max(1e-300));
                    }
                }
            }
        }
    }
}

#[test]
fn sequential_and_parallel_reports_agree() {
    let e = set(&Generator::cantor_middle_thirds(), 5);
    let f = RadialFunction::indicator(0.2, 0.6);
    let g = RadialGrid::for_function(&f, 2, 3.0, 24).unwrap();
    let a = domination_check(&e, &f, 2.0, &g, 1e-9, Exec::Sequential).unwrap();
    let b = domination_check(&e, &f, 2.0, &g, 1e-9, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn maximal_value_monotone_in_cells(
        mask in proptest::collection::vec(any::<bool>(), 32),
        r in 0.05f64..4.0,
        a in 0.0f64..2.0,
        w in 0.05f64..1.5,
    ) {
        let big: Vec<u32> = (0..32).collect();
        let small: Vec<u32> = big.iter().copied().filter(|&j| mask[j as usize]).collect();
        prop_assume!(!small.is_empty());
        let e_big = DilationSet::from_cells(5, big, None).unwrap();
        let e_small = DilationSet::from_cells(5, small, None).unwrap();
        let f = RadialFunction::indicator(a, a + w);
        for d in [2, 3] {
            let lo = maximal_value_only(&e_small, &f, d, r, 1e-11).unwrap();
            let hi = maximal_value_only(&e_big, &f, d, r, 1e-11).unwrap();
            prop_assert!(lo <= hi + 1e-12);
        }
    }

    #[test]
    fn weighted_norm_of_step_is_exact(
        a in 0.0f64..2.0,
        w in 0.1f64..2.0,
        q in 1.0f64..6.0,
        d in 2u32..6,
    ) {
        let f = RadialFunction::indicator(a, a + w);
        let g = RadialGrid::for_function(&f, d, 5.0, 37).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|&r| f.eval(r)).collect();
        let got = weighted_norm(&v, &g, q).unwrap();
        let want = f.weighted_norm(q, d).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want);
    }
}
