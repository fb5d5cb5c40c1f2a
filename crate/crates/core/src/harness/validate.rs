//! Quick invariant suite run by the `validate` experiment.

use serde::{Deserialize, Serialize};

use crate::config::{lipschitz_constants, ModelConfig};
use crate::control::{cost_micro, PiecewiseConstantControl};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::meanfield::{self, GridSpec};
use crate::measure::{self, EmpiricalMeasure};
use crate::micro;
use crate::stochastic::{self, EntityClass, RandomStream, StreamKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

fn point(s: &mut RandomStream, radius: f64) -> Vec2 {
    Vec2::new((2.0 * s.uniform() - 1.0) * radius, (2.0 * s.uniform() - 1.0) * radius)
}

/// Runs every check against `cfg` (with a shortened time grid when the
/// configured one is long) and returns the individual results.
pub fn validate_suite(cfg: &ModelConfig, master_seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut s = stochastic::stream(StreamKey::new(master_seed, EntityClass::McReplication, u64::MAX, 0));

    // Kernel Lipschitz bounds on random pairs.
    let mut worst = 0.0f64;
    for k in [&cfg.kernels.cp, &cfg.kernels.pg, &cfg.kernels.pc, &cfg.kernels.gg] {
        for _ in 0..10_000 {
            let (a, b) = (point(&mut s, 10.0), point(&mut s, 10.0));
            let gap = (k.eval(a) - k.eval(b)).norm() - k.lipschitz() * (a - b).norm();
            worst = worst.max(gap);
        }
    }
    out.push(CheckResult::new("kernel_lipschitz", worst <= 1e-12, format!("max excess {worst:.3e}")));

    // Congestion kernel range.
    let mut eta_ok = true;
    for _ in 0..10_000 {
        let (x, w) = (point(&mut s, 5.0), point(&mut s, 3.0));
        let e = crate::config::eval_eta(&cfg.congestion, &cfg.route, x, w);
        eta_ok &= (0.0..=1.0).contains(&e) && crate::config::eval_eta(&cfg.congestion, &cfg.route, x, Vec2::ZERO) == 0.0;
    }
    out.push(CheckResult::new("eta_range", eta_ok, "eta in [0,1] and eta(x,0)=0".into()));

    let mut short = cfg.clone();
    let cells = cfg.numerics.control_cells;
    if short.numerics.steps > 128 && 128 % cells == 0 {
        short.numerics.steps = 128;
    }
    let u = PiecewiseConstantControl::constant(short.horizon, cells, short.n_guards, cfg.optimize.initial);
    let consts = lipschitz_constants(&short);

    // Replay determinism and confinement of the microscopic system.
    let a = micro::simulate(&short, &u, master_seed)?;
    let b = micro::simulate(&short, &u, master_seed)?;
    out.push(CheckResult::new("micro_replay", a == b, "two runs with one seed".into()));
    let mut rz = 0.0f64;
    let mut rx = 0.0f64;
    for st in &a.states {
        rz = st.z.iter().map(|z| z.norm()).fold(rz, f64::max);
        rx = st.x.iter().map(|x| x.norm()).fold(rx, f64::max);
    }
    out.push(CheckResult::new(
        "gronwall_confinement",
        rz <= consts.radius_guard && rx <= consts.radius_commercial,
        format!("|Z| {rz:.4} <= {:.4}, |X| {rx:.4} <= {:.4}", consts.radius_guard, consts.radius_commercial),
    ));

    // Guard decoupling across the three models and across seeds.
    let other = micro::simulate(&short, &u, master_seed.wrapping_add(1))?;
    let grid = meanfield::simulate_averaged_grid(&short, &u)?;
    let mf = meanfield::simulate_meanfield(&short, &u, 256, GridSpec::from_config(&short))?;
    let guards_ok = a.guard_path() == other.guard_path() && a.guard_path() == grid.guards && grid.guards == mf.guards;
    out.push(CheckResult::new("guard_invariance", guards_ok, "micro, averaged and mean-field guards".into()));

    // Conservation on the pirate grid.
    out.push(CheckResult::new(
        "fp_conservation",
        grid.max_mass_drift <= 1e-12 && grid.min_density >= 0.0 && mf.max_mass_drift <= 1e-12,
        format!("mass drift {:.2e}, min density {:.2e}", grid.max_mass_drift.max(mf.max_mass_drift), grid.min_density),
    ));
    out.push(CheckResult::new(
        "fp_boundary_mass",
        grid.max_boundary_mass <= meanfield::BOUNDARY_MASS_LIMIT,
        format!("boundary mass {:.2e}", grid.max_boundary_mass),
    ));
    let confined = mf.commercial.iter().flatten().all(|p| p.norm() <= consts.radius_commercial);
    out.push(CheckResult::new("particle_confinement", confined, format!("R_X = {:.4}", consts.radius_commercial)));

    // Metric axioms of the exact distance on small clouds.
    let mut axioms = true;
    for _ in 0..20 {
        let cloud = |s: &mut RandomStream| EmpiricalMeasure::new((0..12).map(|_| point(s, 1.0)).collect());
        let (p, q, r) = (cloud(&mut s)?, cloud(&mut s)?, cloud(&mut s)?);
        let (pq, qr, pr) = (measure::w1_exact(&p, &q)?, measure::w1_exact(&q, &r)?, measure::w1_exact(&p, &r)?);
        axioms &= pq >= 0.0 && (pq - measure::w1_exact(&q, &p)?).abs() <= 1e-9 && pr <= pq + qr + 1e-9;
        axioms &= measure::w1_exact(&p, &p)? == 0.0;
    }
    out.push(CheckResult::new("w1_metric_axioms", axioms, "20 random triples".into()));

    // Cost ordering.
    let c = cost_micro(&short, &u, 2, master_seed)?;
    out.push(CheckResult::new(
        "cost_bounds",
        c.value >= c.control_energy && c.contact_term >= 0.0,
        format!("J = {:.6}, energy = {:.6}", c.value, c.control_energy),
    ));

    // Picard fixed point.
    let avg = meanfield::simulate_averaged(&short, &u, 32, master_seed)?;
    let again = meanfield::picard_iterate(&short, &u, &avg.law, master_seed)?;
    let d = measure::w1_alpha_paths(&again, &avg.law, 0.0)?;
    out.push(CheckResult::new("picard_fixed_point", d <= 1e-12, format!("distance {d:.2e}")));
    Ok(out)
}
