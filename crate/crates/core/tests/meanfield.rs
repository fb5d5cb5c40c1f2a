use corsair::config::{KernelSpec, ModelConfig};
use corsair::control::PiecewiseConstantControl;
use corsair::meanfield::{
    self, auto_domain, fokker_planck_step, initial_density, simulate_averaged, DriftField, GridSpec,
};
use corsair::measure::{GridDensity, Rect};
use corsair::micro;
use corsair::par::Execution;
use corsair::Vec2;
use proptest::prelude::*;

fn cfg(steps: usize) -> ModelConfig {
    let mut c = ModelConfig::default_scenario();
    c.numerics.steps = steps;
    c.numerics.control_cells = 4;
    c.numerics.grid_nx = 48;
    c.numerics.grid_ny = 48;
    c
}

fn zero(c: &ModelConfig) -> PiecewiseConstantControl {
    PiecewiseConstantControl::zero(c.horizon, c.numerics.control_cells, c.n_guards)
}

fn decoupled(steps: usize) -> ModelConfig {
    let mut c = cfg(steps);
    c.kernels.pg = KernelSpec::zero();
    c.kernels.pc = KernelSpec::zero();
    c
}

#[test]
fn decoupled_pirate_law_is_a_heat_kernel() {
    // Gaussian initial law with std s: the variance grows by exactly 2κt per
    // coordinate and the mean stays put. The cell-uniform variance at t = 0
    // carries the Δ²/12 term on top of s².
    let c = decoupled(128);
    let run = meanfield::simulate_averaged_grid(&c, &zero(&c)).unwrap();
    let (center, std) = (Vec2::new(0.2, 0.3), 0.25);
    let g0 = &run.law[0];
    let v0 = g0.variance();
    let sheppard = g0.dx() * g0.dx() / 12.0;
    assert!((v0.x - std * std - sheppard).abs() < 0.05 * std * std, "{v0:?}");
    for (t, g) in run.times.iter().zip(&run.law).skip(32).step_by(32) {
        let v = g.variance() - v0;
        let target = 2.0 * c.kappa * t;
        assert!((v.x - target).abs() / target < 0.02, "t = {t}: {v:?} vs {target}");
        assert!((v.y - target).abs() / target < 0.02);
        assert!((g.mean() - center).norm() < 1e-3);
    }
    assert!(run.max_mass_drift <= 1e-12);
}

#[test]
fn constant_drift_translates_the_mean() {
    let domain = Rect { x_min: -2.0, x_max: 2.0, y_min: -2.0, y_max: 2.0 };
    let mut rho = GridDensity::from_fn(domain, 64, 64, |p| (-p.norm_sq() / 0.1).exp()).unwrap();
    let m0 = rho.mean();
    let b = Vec2::new(0.3, -0.2);
    let drift = DriftField::constant(64 * 64, b);
    let dt = 2e-3;
    for _ in 0..250 {
        rho = fokker_planck_step(&rho, &drift, 0.01, dt, Execution::Sequential).unwrap();
    }
    let moved = rho.mean() - m0;
    assert!((moved - b * 0.5).norm() < 5e-3, "{moved:?}");
}

#[test]
fn parallel_and_sequential_runs_are_bit_identical() {
    let mut seq = cfg(64);
    seq.numerics.execution = Execution::Sequential;
    let mut par = seq.clone();
    par.numerics.execution = Execution::Parallel;
    let u = zero(&seq);
    let a = meanfield::simulate_meanfield(&seq, &u, 128, GridSpec::from_config(&seq)).unwrap();
    let b = meanfield::simulate_meanfield(&par, &u, 128, GridSpec::from_config(&par)).unwrap();
    assert_eq!(a, b);
    let a = meanfield::simulate_averaged_grid(&seq, &u).unwrap();
    let b = meanfield::simulate_averaged_grid(&par, &u).unwrap();
    assert_eq!(a, b);
}

#[test]
fn averaged_ensemble_is_a_micro_run_with_m_equal_k() {
    let c = cfg(32);
    let u = zero(&c);
    let avg = simulate_averaged(&c, &u, 5, 11).unwrap();
    let mut mc = c.clone();
    mc.n_pirates = 5;
    let bundle = micro::simulate_replication(&mc, &u, 11, meanfield::AVERAGED_REPLICATION).unwrap();
    for (k, s) in bundle.states.iter().enumerate() {
        assert_eq!(avg.commercial[k], s.x);
        assert_eq!(avg.law.slice(k), s.y);
    }
}

#[test]
fn ensemble_laws_converge_in_k() {
    // Time-T pirate law from K paths against a 2048-path reference, which
    // is independent because it uses another seed.
    let c = cfg(64);
    let u = zero(&c);
    let reference = simulate_averaged(&c, &u, 2048, 1).unwrap();
    let last = c.numerics.steps;
    let ref_t = corsair::measure::EmpiricalMeasure::new(reference.law.slice(last)).unwrap();
    let d: Vec<f64> = [16usize, 64, 256]
        .iter()
        .map(|&k| {
            let run = simulate_averaged(&c, &u, k, 2).unwrap();
            let m = corsair::measure::EmpiricalMeasure::new(run.law.slice(last)).unwrap();
            corsair::measure::w1_transport(&ref_t, &m).unwrap()
        })
        .collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn auto_domain_grows_until_the_boundary_is_clear() {
    let mut c = cfg(32);
    let tight = Rect::centered(Vec2::new(0.2, 0.3), 0.6);
    let fixed = meanfield::simulate_averaged_grid(&{
        let mut f = c.clone();
        f.numerics.grid_nx = 24;
        f.numerics.grid_ny = 24;
        f
    }, &zero(&c))
    .unwrap();
    assert_eq!(fixed.expansions, 0);
    assert!(fixed.max_boundary_mass <= meanfield::BOUNDARY_MASS_LIMIT);
    let pinned = meanfield::simulate_coupled(
        &c,
        &zero(&c),
        &c.commercial_positions(),
        corsair::dynamics::DensityNorm::Ships,
        GridSpec { nx: 24, ny: 24, domain: Some(tight) },
    )
    .unwrap();
    assert!(pinned.max_boundary_mass > meanfield::BOUNDARY_MASS_LIMIT);
    assert!(!pinned.warnings.is_empty());
    c.kappa = 0.3;
    let d = auto_domain(&c);
    assert!(d.contains(Vec2::new(0.2, 0.3)));
}

#[test]
fn point_mass_initial_law_uses_one_cell() {
    let domain = Rect { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
    let g = initial_density(&corsair::config::InitialDistSpec::PointMass { at: Vec2::new(0.1, 0.1) }, domain, 20, 20)
        .unwrap();
    assert_eq!(g.values.iter().filter(|v| **v > 0.0).count(), 1);
    assert!((g.mass() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fokker_planck_steps_conserve_mass_and_positivity(
        bx in prop::collection::vec(-2.0..2.0f64, 16 * 16),
        by in prop::collection::vec(-2.0..2.0f64, 16 * 16),
        kappa in 0.001..0.5f64,
        frac in 0.1..1.0f64,
    ) {
        let domain = Rect { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 };
        let mut rho = GridDensity::from_fn(domain, 16, 16, |p| 1.0 + p.x * p.y).unwrap();
        let drift = DriftField { x: bx, y: by };
        let dt = frac * meanfield::cfl_limit(&rho, &drift, kappa);
        let m0 = rho.mass();
        for _ in 0..20 {
            rho = fokker_planck_step(&rho, &drift, kappa, dt, Execution::Sequential).unwrap();
        }
        prop_assert!((rho.mass() - m0).abs() <= 1e-12);
        prop_assert!(rho.min_value() >= 0.0);
        prop_assert!(fokker_planck_step(&rho, &drift, kappa, 1.01 * dt / frac, Execution::Sequential).is_err());
    }
}
