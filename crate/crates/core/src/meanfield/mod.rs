//! Averaged and mean-field solvers: a finite-volume Fokker–Planck grid for
//! the pirate law, Monte Carlo path ensembles, particle transport for the
//! commercial measure and Picard iteration on path laws.

mod averaged;
mod coupled;
mod fokker_planck;

use serde::{Deserialize, Serialize};

use crate::config::{lipschitz_constants, InitialDistSpec, ModelConfig};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::measure::{GridDensity, PathEnsemble, Rect};

pub use averaged::{
    frozen_law, intermediate_pirates, picard_iterate, simulate_averaged, simulate_averaged_replication, AveragedRun,
    AVERAGED_REPLICATION,
};
pub use coupled::{
    simulate_averaged_grid, simulate_coupled, simulate_meanfield, transport_step, CoupledRun, GridSpec,
    BOUNDARY_MASS_LIMIT,
};
pub use fokker_planck::{
    cfl_limit, fokker_planck_advance, fokker_planck_step, pirate_drift_field, DriftField, CFL_SAFETY,
};

/// A time series of pirate laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "snake_case")]
pub enum LawSeries {
    /// `K` sample paths; the law at `t_k` is their empirical measure.
    McEnsemble(PathEnsemble),
    /// One density per time node.
    Grid { times: Vec<f64>, slices: Vec<GridDensity> },
}

impl LawSeries {
    pub fn times(&self) -> &[f64] {
        match self {
            LawSeries::McEnsemble(p) => &p.times,
            LawSeries::Grid { times, .. } => times,
        }
    }
}

/// Equal-mass commercial particles at every time node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommercialParticles {
    pub times: Vec<f64>,
    pub points: Vec<Vec<Vec2>>,
}

/// Square box around the initial pirate centre that holds the pirate law up
/// to time `T`: initial spread, plus the largest drift displacement, plus six
/// diffusion lengths.
pub fn auto_domain(cfg: &ModelConfig) -> Rect {
    let spread = 2.0 * cfg.kappa * cfg.horizon;
    let dist = &cfg.initial.pirates;
    let reach = match *dist {
        InitialDistSpec::PointMass { .. } => 6.0 * spread.sqrt(),
        InitialDistSpec::UniformDisk { radius, .. } => radius + 6.0 * spread.sqrt(),
        InitialDistSpec::Gaussian { std, .. } => 6.0 * (std * std + spread).sqrt(),
    };
    let drift = lipschitz_constants(cfg).pirate_drift_bound * cfg.horizon;
    Rect::centered(dist.center(), reach + drift)
}

/// Cell averages of the initial pirate law (4×4 sub-samples per cell); a
/// point mass becomes the indicator of its cell.
pub fn initial_density(dist: &InitialDistSpec, domain: Rect, nx: usize, ny: usize) -> Result<GridDensity> {
    const SUB: usize = 4;
    let pdf = |p: Vec2| -> f64 {
        match *dist {
            InitialDistSpec::UniformDisk { center, radius } => {
                if (p - center).norm_sq() <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            InitialDistSpec::Gaussian { center, std } => (-(p - center).norm_sq() / (2.0 * std * std)).exp(),
            InitialDistSpec::PointMass { .. } => unreachable!(),
        }
    };
    match *dist {
        InitialDistSpec::PointMass { at } => GridDensity::point_mass(domain, nx, ny, at),
        _ => {
            let probe = GridDensity::zeros(domain, nx, ny);
            let (dx, dy) = (probe.dx(), probe.dy());
            GridDensity::from_fn(domain, nx, ny, |c| {
                let mut acc = 0.0;
                for a in 0..SUB {
                    for b in 0..SUB {
                        let off = Vec2::new(
                            ((a as f64 + 0.5) / SUB as f64 - 0.5) * dx,
                            ((b as f64 + 0.5) / SUB as f64 - 0.5) * dy,
                        );
                        acc += pdf(c + off);
                    }
                }
                acc
            })
        }
    }
}
