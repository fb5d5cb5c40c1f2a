use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::control::PiecewiseConstantControl;
use crate::dynamics::{self, DensityNorm};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::measure::PathEnsemble;
use crate::micro;
use crate::stochastic;

/// Replication index of the ensemble defining the averaged law, kept apart
/// from the indices used by microscopic replications.
pub const AVERAGED_REPLICATION: u64 = u64::MAX;

/// Averaged model with its pirate law represented by `K` sample paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRun {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `X̄` at every time node.
    pub commercial: Vec<Vec<Vec2>>,
    pub law: PathEnsemble,
    pub guards: Vec<Vec<Vec2>>,
    pub warnings: Vec<String>,
}

impl AveragedRun {
    /// Path of commercial ship `n`.
    pub fn commercial_path(&self, n: usize) -> Vec<Vec2> {
        self.commercial.iter().map(|x| x[n]).collect()
    }
}

/// Co-integrates `X̄` with `k_samples` copies of `Ȳ`. The copies are exactly
/// the pirates of a microscopic run with `M = k_samples`, keyed by
/// [`AVERAGED_REPLICATION`].
pub fn simulate_averaged(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    k_samples: usize,
    master_seed: u64,
) -> Result<AveragedRun> {
    simulate_averaged_replication(cfg, control, k_samples, master_seed, AVERAGED_REPLICATION)
}

pub fn simulate_averaged_replication(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    k_samples: usize,
    master_seed: u64,
    replication: u64,
) -> Result<AveragedRun> {
    if k_samples == 0 {
        return Err(Error::InvalidArgument("simulate_averaged needs K >= 1".into()));
    }
    let mut ens_cfg = cfg.clone();
    ens_cfg.n_pirates = k_samples;
    let steps = cfg.numerics.steps;
    let mut times = Vec::with_capacity(steps + 1);
    let mut commercial = Vec::with_capacity(steps + 1);
    let mut guards = Vec::with_capacity(steps + 1);
    let mut paths: Vec<Vec<Vec2>> = (0..k_samples).map(|_| Vec::with_capacity(steps + 1)).collect();
    let warnings = micro::integrate(&ens_cfg, control, master_seed, replication, |s| {
        times.push(s.t);
        commercial.push(s.x.clone());
        guards.push(s.z.clone());
        for (p, y) in paths.iter_mut().zip(&s.y) {
            p.push(*y);
        }
    })?;
    Ok(AveragedRun {
        dt: cfg.dt(),
        law: PathEnsemble { times: times.clone(), paths },
        times,
        commercial,
        guards,
        warnings,
    })
}

/// Pirates `0..m_count` of the intermediate system: each follows the averaged
/// pirate drift against the reference `X̄` and guards, driven by the same
/// initial and Brownian streams as microscopic pirate `m` in `replication`.
pub fn intermediate_pirates(
    cfg: &ModelConfig,
    reference: &AveragedRun,
    m_count: usize,
    master_seed: u64,
    replication: u64,
) -> Result<PathEnsemble> {
    let steps = reference.times.len() - 1;
    let dt = reference.dt;
    let noise = (2.0 * cfg.kappa).sqrt();
    let sqrt_dt = dt.sqrt();
    let (y0, mut streams) = micro::pirate_streams(
        cfg,
        (0..m_count).map(|m| micro::pirate_keys(master_seed, m, replication)),
    );
    let mut paths = Vec::with_capacity(m_count);
    for (m, (mut y, s)) in y0.into_iter().zip(streams.iter_mut()).enumerate() {
        let mut path = Vec::with_capacity(steps + 1);
        path.push(y);
        for k in 0..steps {
            let b = dynamics::pirate_velocity(cfg, y, &reference.guards[k], &reference.commercial[k]);
            y = y + b * dt + s.increment(sqrt_dt) * noise;
            if !y.is_finite() {
                return Err(Error::Diverged { step: k + 1, t: reference.times[k + 1], entity: format!("pirate {m}") });
            }
            path.push(y);
        }
        paths.push(path);
    }
    Ok(PathEnsemble { times: reference.times.clone(), paths })
}

/// Starting law for Picard iteration: every sample path frozen at its
/// initial position.
pub fn frozen_law(cfg: &ModelConfig, k_samples: usize, master_seed: u64) -> PathEnsemble {
    let steps = cfg.numerics.steps;
    let dt = cfg.dt();
    let paths = (0..k_samples)
        .map(|k| {
            let (init, _) = micro::pirate_keys(master_seed, k, AVERAGED_REPLICATION);
            let y = stochastic::sample_initial(&cfg.initial.pirates, &mut stochastic::stream(init));
            vec![y; steps + 1]
        })
        .collect();
    PathEnsemble { times: (0..=steps).map(|k| k as f64 * dt).collect(), paths }
}

/// One application of the Picard map: solve for `X̃` given the law `law`,
/// then for `Ỹ` given `X̃`, reusing the streams of [`simulate_averaged`] so
/// that its ensemble is the fixed point.
pub fn picard_iterate(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    law: &PathEnsemble,
    master_seed: u64,
) -> Result<PathEnsemble> {
    let steps = cfg.numerics.steps;
    control.check_compatible(cfg.horizon, steps, cfg.n_guards)?;
    if law.times.len() != steps + 1 {
        return Err(Error::InvalidArgument(format!(
            "law has {} time nodes, the run needs {}",
            law.times.len(),
            steps + 1
        )));
    }
    let dt = cfg.dt();
    let k_samples = law.len();
    let exec = cfg.numerics.execution;

    let mut z = cfg.initial.guards.clone();
    let mut x = cfg.commercial_positions();
    let mut xs = Vec::with_capacity(steps + 1);
    let mut zs = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        let mu = law.slice(k);
        let speeds = dynamics::speed_factors(&x, DensityNorm::Ships, cfg, exec);
        let next: Vec<Vec2> = x
            .iter()
            .zip(&speeds)
            .map(|(xn, &v)| {
                let push = dynamics::kernel_mean(&cfg.kernels.cp, *xn, &mu);
                *xn + dynamics::commercial_velocity(cfg, *xn, v, push) * dt
            })
            .collect();
        let next_z = dynamics::advance_guards(cfg, &z, control.at_step(k, steps), dt);
        xs.push(std::mem::replace(&mut x, next));
        zs.push(std::mem::replace(&mut z, next_z));
    }
    xs.push(x);
    zs.push(z);

    let reference = AveragedRun {
        dt,
        times: law.times.clone(),
        commercial: xs,
        law: PathEnsemble { times: Vec::new(), paths: Vec::new() },
        guards: zs,
        warnings: Vec::new(),
    };
    intermediate_pirates(cfg, &reference, k_samples, master_seed, AVERAGED_REPLICATION)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KernelSpec;

    fn small() -> ModelConfig {
        let mut cfg = ModelConfig::default_scenario();
        cfg.numerics.steps = 64;
        cfg.numerics.control_cells = 4;
        cfg
    }

    #[test]
    fn ensemble_equals_micro_run_with_matching_size() {
        let cfg = small();
        let u = PiecewiseConstantControl::zero(cfg.horizon, 4, cfg.n_guards);
        let avg = simulate_averaged_replication(&cfg, &u, 3, 11, 5).unwrap();
        let mut m = cfg.clone();
        m.n_pirates = 3;
        let micro = micro::simulate_replication(&m, &u, 11, 5).unwrap();
        for (k, s) in micro.states.iter().enumerate() {
            assert_eq!(s.x, avg.commercial[k]);
            assert_eq!(s.y, avg.law.slice(k));
            assert_eq!(s.z, avg.guards[k]);
        }
    }

    #[test]
    fn fixed_point_of_picard_is_the_cointegrated_ensemble() {
        let cfg = small();
        let u = PiecewiseConstantControl::zero(cfg.horizon, 4, cfg.n_guards);
        let avg = simulate_averaged(&cfg, &u, 16, 3).unwrap();
        let again = picard_iterate(&cfg, &u, &avg.law, 3).unwrap();
        let d = crate::measure::w1_alpha_paths(&again, &avg.law, 0.0).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn uncoupled_picard_map_is_constant() {
        let mut cfg = small();
        cfg.kernels.cp = KernelSpec::zero();
        cfg.kernels.pc = KernelSpec::zero();
        let u = PiecewiseConstantControl::zero(cfg.horizon, 4, cfg.n_guards);
        let a = picard_iterate(&cfg, &u, &frozen_law(&cfg, 8, 1), 1).unwrap();
        let b = picard_iterate(&cfg, &u, &a, 1).unwrap();
        assert_eq!(a, b);
    }
}
