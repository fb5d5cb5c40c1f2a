use serde::{Deserialize, Serialize};

use crate::config::{CostKind, ModelConfig};
use crate::error::Result;
use crate::meanfield::{self, GridSpec};
use crate::micro;
use crate::par;

use super::{control_energy, PiecewiseConstantControl};

/// Normal quantile of the reported two-sided 95% intervals.
const Z95: f64 = 1.96;

/// A cost value split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub value: f64,
    pub control_energy: f64,
    pub contact_term: f64,
    /// Half-width of the 95% interval of the contact term; 0 when exact.
    pub ci_halfwidth: f64,
    pub replications: usize,
}

impl CostReport {
    fn new(u: &PiecewiseConstantControl, contact_term: f64, ci_halfwidth: f64, replications: usize) -> Self {
        let control_energy = control_energy(u);
        Self {
            value: control_energy + contact_term,
            control_energy,
            contact_term,
            ci_halfwidth,
            replications,
        }
    }

    fn from_samples(u: &PiecewiseConstantControl, samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let ci = if samples.len() > 1 {
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Z95 * var.sqrt() / n.sqrt()
        } else {
            0.0
        };
        Self::new(u, mean, ci, samples.len())
    }
}

/// Expected microscopic cost over `replications` independent runs.
pub fn cost_micro(
    cfg: &ModelConfig,
    u: &PiecewiseConstantControl,
    replications: usize,
    master_seed: u64,
) -> Result<CostReport> {
    if replications == 0 {
        return Err(crate::Error::InvalidArgument("cost_micro needs R >= 1".into()));
    }
    let dt = cfg.dt();
    let steps = cfg.numerics.steps;
    let per_rep = par::map_range(cfg.numerics.execution, replications, |r| {
        let mut acc = 0.0;
        let mut k = 0;
        micro::integrate(cfg, u, master_seed, r as u64, |s| {
            if k < steps {
                acc += micro::contact_rate(s, cfg);
            }
            k += 1;
        })?;
        Ok(acc * dt)
    });
    let samples = per_rep.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(CostReport::from_samples(u, &samples))
}

/// Representation of the averaged pirate law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum AveragedBackend {
    Mc { samples: usize },
    Grid,
}

/// Averaged cost `J_N`. The ensemble backend reports a 95% interval over its
/// sample paths; the grid backend is deterministic and ignores the seed.
pub fn cost_averaged(
    cfg: &ModelConfig,
    u: &PiecewiseConstantControl,
    backend: AveragedBackend,
    master_seed: u64,
) -> Result<CostReport> {
    match backend {
        AveragedBackend::Grid => {
            let run = meanfield::simulate_averaged_grid(cfg, u)?;
            Ok(CostReport::new(u, run.contact_integral(), 0.0, 1))
        }
        AveragedBackend::Mc { samples } => {
            if samples == 0 {
                return Err(crate::Error::InvalidArgument("ensemble backend needs K >= 1".into()));
            }
            let mut ens = cfg.clone();
            ens.n_pirates = samples;
            let steps = cfg.numerics.steps;
            let mut per_sample = vec![0.0; samples];
            let mut k = 0;
            micro::integrate(&ens, u, master_seed, meanfield::AVERAGED_REPLICATION, |s| {
                if k < steps {
                    for (acc, y) in per_sample.iter_mut().zip(&s.y) {
                        *acc += micro::contact_rate_between(&s.x, std::slice::from_ref(y), cfg);
                    }
                }
                k += 1;
            })?;
            let dt = cfg.dt();
            per_sample.iter_mut().for_each(|c| *c *= dt);
            Ok(CostReport::from_samples(u, &per_sample))
        }
    }
}

/// Resolution of the mean-field solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanfieldDiscretization {
    pub particles: usize,
    pub grid: GridSpec,
}

impl MeanfieldDiscretization {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        Self {
            particles: cfg.numerics.particles,
            grid: GridSpec::from_config(cfg),
        }
    }
}

/// Mean-field cost `J`: the danger integrated against particles × grid cells.
pub fn cost_meanfield(
    cfg: &ModelConfig,
    u: &PiecewiseConstantControl,
    disc: MeanfieldDiscretization,
) -> Result<CostReport> {
    let run = meanfield::simulate_meanfield(cfg, u, disc.particles, disc.grid)?;
    Ok(CostReport::new(u, run.contact_integral(), 0.0, 1))
}

/// A cost functional selected by configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunctional {
    Micro { replications: usize },
    Averaged { backend: AveragedBackend },
    Meanfield { discretization: MeanfieldDiscretization },
}

impl CostFunctional {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        match cfg.optimize.cost {
            CostKind::Micro => CostFunctional::Micro { replications: cfg.numerics.replications },
            CostKind::AveragedMc => CostFunctional::Averaged {
                backend: AveragedBackend::Mc { samples: cfg.numerics.ensemble },
            },
            CostKind::AveragedGrid => CostFunctional::Averaged { backend: AveragedBackend::Grid },
            CostKind::Meanfield => CostFunctional::Meanfield {
                discretization: MeanfieldDiscretization::from_config(cfg),
            },
        }
    }

    pub fn evaluate(&self, cfg: &ModelConfig, u: &PiecewiseConstantControl, master_seed: u64) -> Result<CostReport> {
        match *self {
            CostFunctional::Micro { replications } => cost_micro(cfg, u, replications, master_seed),
            CostFunctional::Averaged { backend } => cost_averaged(cfg, u, backend, master_seed),
            CostFunctional::Meanfield { discretization } => cost_meanfield(cfg, u, discretization),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(
            self,
            CostFunctional::Averaged { backend: AveragedBackend::Grid } | CostFunctional::Meanfield { .. }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DangerKernelSpec, KernelSpec};
    use crate::geometry::Vec2;

    fn quiet(mut cfg: ModelConfig) -> ModelConfig {
        cfg.kernels.cp = KernelSpec::zero();
        cfg.kernels.pg = KernelSpec::zero();
        cfg.kernels.pc = KernelSpec::zero();
        cfg.kernels.gg = KernelSpec::zero();
        cfg.numerics.steps = 32;
        cfg.numerics.control_cells = 4;
        cfg
    }

    #[test]
    fn no_danger_means_energy_only() {
        let mut cfg = quiet(ModelConfig::default_scenario());
        cfg.danger = DangerKernelSpec { amplitude: 0.0, radius: 0.3 };
        let u = PiecewiseConstantControl::constant(cfg.horizon, 4, 2, Vec2::new(0.5, -0.25));
        let r = cost_micro(&cfg, &u, 4, 1).unwrap();
        assert_eq!(r.value, control_energy(&u));
        assert_eq!(r.ci_halfwidth, 0.0);
        let g = cost_averaged(&cfg, &u, AveragedBackend::Grid, 1).unwrap();
        assert_eq!(g.value, control_energy(&u));
    }

    #[test]
    fn frozen_coincident_ships_accumulate_full_danger() {
        let mut cfg = quiet(ModelConfig::default_scenario());
        cfg.kappa = 0.0;
        cfg.congestion.v_max = 0.0;
        cfg.n_commercial = 1;
        cfg.n_pirates = 1;
        cfg.initial.commercial = crate::config::CommercialInit::Points { points: vec![Vec2::new(0.5, 0.5)] };
        cfg.initial.pirates = crate::config::InitialDistSpec::PointMass { at: Vec2::new(0.5, 0.5) };
        let u = PiecewiseConstantControl::zero(cfg.horizon, 4, 2);
        let r = cost_micro(&cfg, &u, 3, 9).unwrap();
        assert!((r.contact_term - cfg.horizon * cfg.danger.amplitude).abs() < 1e-12);
    }

    #[test]
    fn micro_cost_is_reproducible() {
        let mut cfg = ModelConfig::default_scenario();
        cfg.numerics.steps = 32;
        cfg.numerics.control_cells = 4;
        let u = PiecewiseConstantControl::bang_bang(cfg.horizon, 4, 2, Vec2::new(0.3, 0.1));
        let a = cost_micro(&cfg, &u, 5, 42).unwrap();
        let b = cost_micro(&cfg, &u, 5, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.value >= a.control_energy && a.contact_term >= 0.0);
    }
}
