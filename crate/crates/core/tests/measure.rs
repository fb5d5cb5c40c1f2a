use corsair::measure::{
    self, w1_1d, w1_alpha_paths, w1_sliced, EmpiricalMeasure, GridDensity, PathEnsemble, Rect, W1Method,
};
use corsair::stochastic::{self, EntityClass, RandomStream, StreamKey};
use corsair::Vec2;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vec2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn cloud(n: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    prop::collection::vec(point(), n).prop_map(|p| EmpiricalMeasure::new(p).unwrap())
}

fn triple() -> impl Strategy<Value = (EmpiricalMeasure, EmpiricalMeasure, EmpiricalMeasure)> {
    (1usize..24).prop_flat_map(|n| (cloud(n), cloud(n), cloud(n)))
}

fn stream(idx: u64) -> RandomStream {
    stochastic::stream(StreamKey::new(77, EntityClass::SlicedW1, idx, 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_w1_is_a_metric((a, b, c) in triple()) {
        let d = |x: &EmpiricalMeasure, y: &EmpiricalMeasure| measure::w1_exact(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!(d(&a, &b) >= 0.0);
    }

    #[test]
    fn kantorovich_bound_for_linear_tests((a, b, _) in triple(), theta in 0.0..6.3f64) {
        // f(x) = e·x is 1-Lipschitz, so |∫f dμ - ∫f dν| <= W₁(μ, ν).
        let e = Vec2::new(theta.cos(), theta.sin());
        let gap = (a.mean().dot(e) - b.mean().dot(e)).abs();
        prop_assert!(gap <= measure::w1_exact(&a, &b).unwrap() + 1e-12);
    }

    #[test]
    fn kantorovich_bound_for_piecewise_linear_tests(
        (a, b, _) in triple(),
        centers in prop::collection::vec((point(), -1.0..1.0f64), 1..5),
    ) {
        // A minimum of cones |x - c| + h is 1-Lipschitz.
        let f = |x: Vec2| centers.iter().map(|(c, h)| (x - *c).norm() + h).fold(f64::INFINITY, f64::min);
        let avg = |m: &EmpiricalMeasure| m.points.iter().map(|p| f(*p)).sum::<f64>() / m.len() as f64;
        prop_assert!((avg(&a) - avg(&b)).abs() <= measure::w1_exact(&a, &b).unwrap() + 1e-9);
    }

    #[test]
    fn sliced_never_exceeds_exact((a, b, _) in triple(), seed in any::<u64>()) {
        let mut s = stochastic::stream(StreamKey::new(seed, EntityClass::SlicedW1, 0, 0));
        let sliced = w1_sliced(&a, &b, 32, &mut s).unwrap();
        prop_assert!(sliced <= measure::w1_exact(&a, &b).unwrap() + 1e-12);
    }

    #[test]
    fn translation_moves_w1_by_the_shift(a in cloud(12), shift in point()) {
        let b = EmpiricalMeasure::new(a.points.iter().map(|p| *p + shift).collect()).unwrap();
        prop_assert!((measure::w1_exact(&a, &b).unwrap() - shift.norm()).abs() <= 1e-12);
    }

    #[test]
    fn transport_handles_divisible_sizes(a in cloud(4), b in cloud(12)) {
        // Repeating each point of the small cloud three times gives an equal-size problem.
        let rep = EmpiricalMeasure::new(a.points.iter().flat_map(|p| [*p; 3]).collect()).unwrap();
        let direct = measure::w1_transport(&a, &b).unwrap();
        let assigned = measure::w1_exact(&rep, &b).unwrap();
        prop_assert!((direct - assigned).abs() <= 1e-12);
    }

    #[test]
    fn one_dimensional_formula_matches_assignment(xs in prop::collection::vec(-5.0..5.0f64, 1..20), shift in -2.0..2.0f64) {
        let mut ys: Vec<f64> = xs.iter().rev().map(|x| x * 0.5 + shift).collect();
        let a = EmpiricalMeasure::new(xs.iter().map(|&x| Vec2::new(x, 0.0)).collect()).unwrap();
        let b = EmpiricalMeasure::new(ys.iter().map(|&y| Vec2::new(y, 0.0)).collect()).unwrap();
        let mut xs = xs.clone();
        let one_d = w1_1d(&mut xs, &mut ys);
        prop_assert!((one_d - measure::w1_exact(&a, &b).unwrap()).abs() <= 1e-12);
    }
}

fn gaussian_cloud(n: usize, s: &mut RandomStream) -> EmpiricalMeasure {
    EmpiricalMeasure::new((0..n).map(|_| Vec2::new(s.normal(), s.normal())).collect()).unwrap()
}

#[test]
fn empirical_w1_shrinks_with_sample_size() {
    let reference = gaussian_cloud(8192, &mut stream(1));
    let dists: Vec<f64> = [32usize, 128, 512]
        .iter()
        .map(|&n| {
            let mean: f64 = (0..4)
                .map(|r| {
                    let sample = gaussian_cloud(n, &mut stream(100 + r + n as u64));
                    measure::w1_transport(&reference, &sample).unwrap()
                })
                .sum();
            mean / 4.0
        })
        .collect();
    assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");
}

#[test]
fn auto_dispatch_labels_its_method() {
    let a = gaussian_cloud(30, &mut stream(2));
    let b = gaussian_cloud(7, &mut stream(3));
    let est = measure::w1_auto(&a, &b, 64, &mut stream(4)).unwrap();
    assert_eq!(est.method, W1Method::Sliced { projections: 64 });
    let c = gaussian_cloud(10, &mut stream(5));
    assert_eq!(measure::w1_auto(&a, &c, 64, &mut stream(4)).unwrap().method, W1Method::Exact);
}

#[test]
fn size_mismatch_is_rejected_by_the_assignment_solver() {
    let a = gaussian_cloud(3, &mut stream(6));
    let b = gaussian_cloud(4, &mut stream(7));
    assert!(measure::w1_exact(&a, &b).is_err());
    assert!(EmpiricalMeasure::new(vec![]).is_err());
    assert!(EmpiricalMeasure::new(vec![Vec2::new(f64::NAN, 0.0)]).is_err());
}

#[test]
fn path_distance_weights_late_deviations_less() {
    let times = vec![0.0, 0.5, 1.0];
    let a = PathEnsemble { times: times.clone(), paths: vec![vec![Vec2::ZERO; 3]] };
    let b = PathEnsemble { times, paths: vec![vec![Vec2::ZERO, Vec2::ZERO, Vec2::new(1.0, 0.0)]] };
    assert_eq!(w1_alpha_paths(&a, &b, 0.0).unwrap(), 1.0);
    assert!((w1_alpha_paths(&a, &b, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
}

#[test]
fn grid_samples_follow_the_density() {
    let domain = Rect { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
    let g = GridDensity::from_fn(domain, 32, 32, |p| if p.x > 0.0 { 3.0 } else { 1.0 }).unwrap();
    let m = g.sample(20_000, &mut stream(8));
    assert!(m.points.iter().all(|p| domain.contains(*p)));
    let right = m.points.iter().filter(|p| p.x > 0.0).count() as f64 / 20_000.0;
    assert!((right - 0.75).abs() < 0.015, "{right}");
    let r = measure::w1_grid_empirical(&g, &g.sample(256, &mut stream(9)), 3).unwrap();
    assert!(r.value > 0.0 && r.floor > 0.0);
    assert!(r.value < 3.0 * r.floor);
}
