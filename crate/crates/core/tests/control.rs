use approx::assert_relative_eq;
use corsair::config::{KernelSpec, ModelConfig};
use corsair::control::{
    control_energy, cost_averaged, cost_meanfield, cost_micro, fd_gradient, optimize, AveragedBackend,
    CostFunctional, MeanfieldDiscretization, OptimizeOutcome, OptimizerOptions, PiecewiseConstantControl,
};
use corsair::meanfield::GridSpec;
use corsair::par::Execution;
use corsair::Vec2;

fn small(steps: usize) -> ModelConfig {
    let mut c = ModelConfig::default_scenario();
    c.numerics.steps = steps;
    c.numerics.control_cells = 4;
    c.numerics.grid_nx = 32;
    c.numerics.grid_ny = 32;
    c.numerics.particles = 128;
    c
}

fn u(c: &ModelConfig) -> PiecewiseConstantControl {
    PiecewiseConstantControl::bang_bang(c.horizon, c.numerics.control_cells, c.n_guards, Vec2::new(0.3, 0.2))
}

#[test]
fn micro_ci_shrinks_like_inverse_root_replications() {
    let c = small(32);
    let ratios: Vec<f64> = (0..20)
        .map(|seed| {
            let a = cost_micro(&c, &u(&c), 16, seed).unwrap();
            let b = cost_micro(&c, &u(&c), 32, seed + 1000).unwrap();
            b.ci_halfwidth / a.ci_halfwidth
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((0.6..=0.82).contains(&mean), "mean ratio {mean}");
}

#[test]
fn meanfield_cost_is_stable_under_grid_refinement() {
    let c = small(64);
    // Upwinding is first order; the shipped 64² grid is the coarse level.
    let coarse = MeanfieldDiscretization { particles: 256, grid: GridSpec { nx: 64, ny: 64, domain: None } };
    let fine = MeanfieldDiscretization { particles: 256, grid: GridSpec { nx: 128, ny: 128, domain: None } };
    let a = cost_meanfield(&c, &u(&c), coarse).unwrap().contact_term;
    let b = cost_meanfield(&c, &u(&c), fine).unwrap().contact_term;
    assert!((a - b).abs() / b < 0.02, "{a} vs {b}");
}

#[test]
fn grid_backend_ignores_the_seed() {
    let c = small(32);
    let a = cost_averaged(&c, &u(&c), AveragedBackend::Grid, 1).unwrap();
    let b = cost_averaged(&c, &u(&c), AveragedBackend::Grid, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.ci_halfwidth, 0.0);
    assert!(CostFunctional::Averaged { backend: AveragedBackend::Grid }.is_deterministic());
}

#[test]
fn averaged_backends_agree_within_their_noise() {
    let c = small(64);
    let grid = cost_averaged(&c, &u(&c), AveragedBackend::Grid, 0).unwrap();
    let mc = cost_averaged(&c, &u(&c), AveragedBackend::Mc { samples: 1024 }, 0).unwrap();
    assert_eq!(grid.control_energy, mc.control_energy);
    assert!(
        (grid.contact_term - mc.contact_term).abs() <= 3.0 * mc.ci_halfwidth,
        "grid {} mc {} ± {}",
        grid.contact_term,
        mc.contact_term,
        mc.ci_halfwidth
    );
}

#[test]
fn left_endpoint_contact_matches_a_hand_count() {
    // Ships and pirates frozen on top of each other: contact is a·T regardless
    // of the step count.
    let mut c = small(16);
    c.kernels = corsair::config::Kernels {
        cp: KernelSpec::zero(),
        pg: KernelSpec::zero(),
        pc: KernelSpec::zero(),
        gg: KernelSpec::zero(),
    };
    c.congestion.v_max = 1e-300;
    c.kappa = 1e-300;
    c.horizon = 2.0;
    c.n_commercial = 1;
    c.initial.commercial = corsair::config::CommercialInit::Points { points: vec![Vec2::new(0.5, 0.5)] };
    c.initial.pirates = corsair::config::InitialDistSpec::PointMass { at: Vec2::new(0.5, 0.5) };
    let z = PiecewiseConstantControl::zero(2.0, 4, c.n_guards);
    let r = cost_micro(&c, &z, 3, 0).unwrap();
    assert_relative_eq!(r.contact_term, 2.0 * c.danger.amplitude, epsilon = 1e-12);
    assert_eq!(r.ci_halfwidth, 0.0);
    assert_eq!(r.value, r.contact_term);
}

#[test]
fn fd_gradient_matches_the_energy_gradient() {
    let c = small(16);
    let mut quad = c.clone();
    quad.danger.amplitude = 0.0;
    let uu = u(&c);
    let cost = |v: &PiecewiseConstantControl, s: u64| cost_averaged(&quad, v, AveragedBackend::Grid, s);
    let g = fd_gradient(&cost, &uu, 1e-4, 0, Execution::Parallel).unwrap();
    let w = uu.cell_width();
    for (gi, ui) in g.iter().zip(uu.to_flat()) {
        assert!((gi - w * ui).abs() < 1e-9);
    }
    let seq = fd_gradient(&cost, &uu, 1e-4, 0, Execution::Sequential).unwrap();
    assert_eq!(g, seq);
}

#[test]
fn micro_gradient_uses_common_random_numbers() {
    let c = small(16);
    let cost = |v: &PiecewiseConstantControl, s: u64| cost_micro(&c, v, 4, s);
    let a = fd_gradient(&cost, &u(&c), 1e-3, 9, Execution::Parallel).unwrap();
    let b = fd_gradient(&cost, &u(&c), 1e-3, 9, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|g| g.is_finite()));
}

#[test]
fn optimizer_descends_the_averaged_cost() {
    let c = small(32);
    let set = c.control_set();
    let start = PiecewiseConstantControl::constant(c.horizon, 4, c.n_guards, Vec2::new(0.5, 0.5));
    let cost = |v: &PiecewiseConstantControl, s: u64| cost_averaged(&c, v, AveragedBackend::Grid, s);
    let opts = OptimizerOptions { max_iters: 5, ..OptimizerOptions::default() };
    let r = optimize(&cost, &start, &set, &opts, 0, Execution::Parallel).unwrap();
    assert!(r.history.windows(2).all(|w| w[1].report.value <= w[0].report.value));
    assert!(r.history.last().unwrap().report.value < r.history[0].report.value);
    assert!(r.control.is_feasible(&set));
    assert!(r.history.len() <= 6);
    assert_ne!(r.outcome, OptimizeOutcome::Stalled);
    assert_eq!(control_energy(&r.control), r.history.last().unwrap().report.control_energy);
}

#[test]
fn dictionary_minimum_approaches_the_averaged_minimum() {
    let mut c = small(128);
    c.numerics.control_cells = 16;
    let (t, l) = (c.horizon, c.n_guards);
    let dictionary = [
        PiecewiseConstantControl::zero(t, 16, l),
        PiecewiseConstantControl::constant(t, 16, l, Vec2::new(0.3, 0.0)),
        PiecewiseConstantControl::bang_bang(t, 16, l, Vec2::new(0.5, 0.5)),
    ];
    let m_values = [8, 32, 128];
    let sweeps: Vec<_> = dictionary
        .iter()
        .map(|u| corsair::harness::converge_m(&c, u, &m_values, 8, 512, 3, 17).unwrap())
        .collect();
    let reference_min = sweeps.iter().map(|s| s.reference_cost.value).fold(f64::INFINITY, f64::min);
    let reference_ci = sweeps.iter().map(|s| s.reference_cost.ci_halfwidth).fold(0.0, f64::max);
    let (gaps, floors): (Vec<f64>, Vec<f64>) = (0..m_values.len())
        .map(|i| {
            let micro_min = sweeps.iter().map(|s| s.rows[i].cost_micro).fold(f64::INFINITY, f64::min);
            let micro_ci = sweeps.iter().map(|s| s.rows[i].cost_micro_ci).fold(0.0, f64::max);
            ((micro_min - reference_min).abs(), micro_ci + reference_ci)
        })
        .unzip();
    assert!(corsair::harness::decreasing_above_floor(&gaps, &floors), "{gaps:?} {floors:?}");
}
