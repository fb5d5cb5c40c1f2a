//! Piecewise-constant guard controls, the cost functionals and the
//! projected-gradient optimiser.

mod cost;
mod optimize;

pub use cost::{
    cost_averaged, cost_meanfield, cost_micro, AveragedBackend, CostFunctional, CostReport,
    MeanfieldDiscretization,
};
pub use optimize::{fd_gradient, optimize, HistoryEntry, OptimizeOutcome, OptimizeResult, OptimizerOptions};

use serde::{Deserialize, Serialize};

use crate::config::ControlSetSpec;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// A control constant on `n_cells` uniform cells of `[0, T]`; `values[k][ℓ]`
/// is the velocity command for guard `ℓ` on cell `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantControl {
    pub horizon: f64,
    pub values: Vec<Vec<Vec2>>,
}

impl PiecewiseConstantControl {
    pub fn zero(horizon: f64, n_cells: usize, guards: usize) -> Self {
        Self::constant(horizon, n_cells, guards, Vec2::ZERO)
    }

    pub fn constant(horizon: f64, n_cells: usize, guards: usize, u: Vec2) -> Self {
        Self {
            horizon,
            values: vec![vec![u; guards]; n_cells],
        }
    }

    /// Alternates between `+u` and `-u` on consecutive cells.
    pub fn bang_bang(horizon: f64, n_cells: usize, guards: usize, u: Vec2) -> Self {
        Self {
            horizon,
            values: (0..n_cells)
                .map(|k| vec![if k % 2 == 0 { u } else { -u }; guards])
                .collect(),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn guards(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn cell_width(&self) -> f64 {
        self.horizon / self.n_cells() as f64
    }

    /// Value used on time step `k` of `steps` (left-endpoint sampling).
    #[inline]
    pub fn at_step(&self, k: usize, steps: usize) -> &[Vec2] {
        let cell = (k * self.n_cells() / steps).min(self.n_cells() - 1);
        &self.values[cell]
    }

    /// Checks shape and time-grid compatibility with a run of `steps` steps.
    pub fn check_compatible(&self, horizon: f64, steps: usize, guards: usize) -> Result<()> {
        if self.n_cells() == 0 || !steps.is_multiple_of(self.n_cells()) {
            return Err(Error::InvalidArgument(format!(
                "control cells ({}) must divide the number of steps ({steps})",
                self.n_cells()
            )));
        }
        if self.values.iter().any(|v| v.len() != guards) {
            return Err(Error::InvalidArgument(format!(
                "control must have {guards} guard columns"
            )));
        }
        if (self.horizon - horizon).abs() > 1e-12 * horizon.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "control horizon {} differs from T = {horizon}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn is_feasible(&self, set: &ControlSetSpec) -> bool {
        self.values.iter().flatten().all(|u| set.contains(*u))
    }

    /// Flattened coordinates `[cell][guard][x,y]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values
            .iter()
            .flatten()
            .flat_map(|u| [u.x, u.y])
            .collect()
    }

    pub fn from_flat(&self, flat: &[f64]) -> Self {
        let guards = self.guards();
        let values = flat
            .chunks_exact(2 * guards)
            .map(|cell| cell.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
            .collect();
        Self {
            horizon: self.horizon,
            values,
        }
    }
}

/// `½∫₀ᵀ|u(t)|²dt = (T/n_cells)·Σ_k ½|u_k|²` with the Frobenius norm.
pub fn control_energy(u: &PiecewiseConstantControl) -> f64 {
    let sum: f64 = u.values.iter().flatten().map(|v| v.norm_sq()).sum();
    0.5 * u.cell_width() * sum
}

/// Componentwise clamp onto the box `[-u_max, u_max]^{2×L}`.
pub fn project(raw: &[Vec<Vec2>], horizon: f64, set: &ControlSetSpec) -> Result<PiecewiseConstantControl> {
    if raw.iter().any(|v| v.len() != set.guards) {
        return Err(Error::InvalidArgument(format!(
            "each control value needs {} guard columns",
            set.guards
        )));
    }
    Ok(PiecewiseConstantControl {
        horizon,
        values: raw
            .iter()
            .map(|cell| {
                cell.iter()
                    .map(|u| Vec2::new(set.clamp(u.x), set.clamp(u.y)))
                    .collect()
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(u_max: f64, guards: usize) -> ControlSetSpec {
        ControlSetSpec { u_max, guards }
    }

    #[test]
    fn energy_examples() {
        assert_eq!(control_energy(&PiecewiseConstantControl::zero(1.0, 4, 2)), 0.0);
        let u = PiecewiseConstantControl::constant(2.0, 1, 1, Vec2::new(3.0, 4.0));
        assert_eq!(control_energy(&u), 25.0);
        let mut scaled = u.clone();
        scaled.values[0][0] = scaled.values[0][0] * 3.0;
        assert_eq!(control_energy(&scaled), 9.0 * 25.0);
    }

    #[test]
    fn projection_clamps_and_is_idempotent() {
        let s = set(1.0, 2);
        let raw = vec![vec![Vec2::new(0.5, -0.25), Vec2::new(2.0, -3.0)]];
        let p = project(&raw, 1.0, &s).unwrap();
        assert_eq!(p.values[0][0], Vec2::new(0.5, -0.25));
        assert_eq!(p.values[0][1], Vec2::new(1.0, -1.0));
        let pp = project(&p.values, 1.0, &s).unwrap();
        assert_eq!(p, pp);
        assert!(pp.is_feasible(&s));
    }

    #[test]
    fn left_endpoint_cell_lookup() {
        let u = PiecewiseConstantControl {
            horizon: 1.0,
            values: (0..4).map(|k| vec![Vec2::new(k as f64, 0.0)]).collect(),
        };
        assert_eq!(u.at_step(0, 16)[0].x, 0.0);
        assert_eq!(u.at_step(3, 16)[0].x, 0.0);
        assert_eq!(u.at_step(4, 16)[0].x, 1.0);
        assert_eq!(u.at_step(15, 16)[0].x, 3.0);
        assert!(u.check_compatible(1.0, 16, 1).is_ok());
        assert!(u.check_compatible(1.0, 18, 1).is_err());
    }

    #[test]
    fn flat_roundtrip() {
        let u = PiecewiseConstantControl::bang_bang(1.0, 3, 2, Vec2::new(0.3, -0.1));
        assert_eq!(u.from_flat(&u.to_flat()), u);
    }
}
