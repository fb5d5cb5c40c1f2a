use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::measure::{kernel_field_from_points, GridDensity};
use crate::par::{self, Execution};

/// Safety factor applied to the explicit stability limit.
pub const CFL_SAFETY: f64 = 0.9;

/// Cell-centred velocity field in the grid's cell order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl DriftField {
    pub fn zeros(cells: usize) -> Self {
        Self { x: vec![0.0; cells], y: vec![0.0; cells] }
    }

    pub fn constant(cells: usize, b: Vec2) -> Self {
        Self { x: vec![b.x; cells], y: vec![b.y; cells] }
    }

    pub fn at(&self, cell: usize) -> Vec2 {
        Vec2::new(self.x[cell], self.y[cell])
    }

    pub fn max_abs(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        (m(&self.x), m(&self.y))
    }
}

/// Largest step keeping the explicit scheme positivity-preserving:
/// `0.9 / (2κ(1/Δx² + 1/Δy²) + 2·max|b₁|/Δx + 2·max|b₂|/Δy)`.
pub fn cfl_limit(grid: &GridDensity, drift: &DriftField, kappa: f64) -> f64 {
    let (dx, dy) = (grid.dx(), grid.dy());
    let (bx, by) = drift.max_abs();
    let rate = 2.0 * kappa * (1.0 / (dx * dx) + 1.0 / (dy * dy)) + 2.0 * bx / dx + 2.0 * by / dy;
    if rate == 0.0 {
        f64::INFINITY
    } else {
        CFL_SAFETY / rate
    }
}

/// One explicit finite-volume step of `∂ρ/∂t = κΔρ - ∇·(bρ)` with no-flux
/// walls. Face velocities average the two adjacent cell drifts and advection
/// is donor-cell upwind.
pub fn fokker_planck_step(
    rho: &GridDensity,
    drift: &DriftField,
    kappa: f64,
    dt: f64,
    exec: Execution,
) -> Result<GridDensity> {
    let limit = cfl_limit(rho, drift, kappa);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepRejected { dt, suggested_dt: limit });
    }
    Ok(step_unchecked(rho, drift, kappa, dt, exec))
}

fn step_unchecked(rho: &GridDensity, drift: &DriftField, kappa: f64, dt: f64, exec: Execution) -> GridDensity {
    let (nx, ny) = (rho.nx, rho.ny);
    let (dx, dy) = (rho.dx(), rho.dy());
    let r = &rho.values;
    let (bx, by) = (&drift.x, &drift.y);
    let (kx, ky) = (kappa / dx, kappa / dy);
    // Flux through the face between cells `a` (low side) and `b`.
    let flux = |a: usize, b: usize, u: f64, k: f64| -> f64 {
        let adv = if u > 0.0 { u * r[a] } else { u * r[b] };
        adv - k * (r[b] - r[a])
    };
    let rows = par::map_range(exec, ny, |j| {
        let mut out = vec![0.0; nx];
        for i in 0..nx {
            let c = j * nx + i;
            let east = if i + 1 < nx { flux(c, c + 1, 0.5 * (bx[c] + bx[c + 1]), kx) } else { 0.0 };
            let west = if i > 0 { flux(c - 1, c, 0.5 * (bx[c - 1] + bx[c]), kx) } else { 0.0 };
            let north = if j + 1 < ny { flux(c, c + nx, 0.5 * (by[c] + by[c + nx]), ky) } else { 0.0 };
            let south = if j > 0 { flux(c - nx, c, 0.5 * (by[c - nx] + by[c]), ky) } else { 0.0 };
            out[i] = r[c] - dt / dx * (east - west) - dt / dy * (north - south);
        }
        out
    });
    GridDensity {
        domain: rho.domain,
        nx,
        ny,
        values: rows.concat(),
    }
}

/// Advances by `dt` in equal sub-steps that respect [`cfl_limit`].
/// Returns the new density and the number of sub-steps taken.
pub fn fokker_planck_advance(
    rho: &GridDensity,
    drift: &DriftField,
    kappa: f64,
    dt: f64,
    exec: Execution,
) -> Result<(GridDensity, usize)> {
    let limit = cfl_limit(rho, drift, kappa);
    let n = if dt <= limit { 1 } else { (dt / limit).ceil() as usize };
    let h = dt / n as f64;
    let mut cur = step_unchecked(rho, drift, kappa, h, exec);
    for _ in 1..n {
        cur = step_unchecked(&cur, drift, kappa, h, exec);
    }
    Ok((cur, n))
}

/// Pirate drift `(1/L)·Σ K^pg(c - z_ℓ) - (1/n)·Σ K^pc(c - x)` at every cell
/// centre `c`, where `ships` is either the `N` commercial ships or the
/// commercial particles.
pub fn pirate_drift_field(
    grid: &GridDensity,
    guards: &[Vec2],
    ships: &[Vec2],
    cfg: &ModelConfig,
    exec: Execution,
) -> DriftField {
    let (gx, gy) = kernel_field_from_points(grid, &cfg.kernels.pg, guards, exec);
    let (cx, cy) = kernel_field_from_points(grid, &cfg.kernels.pc, ships, exec);
    DriftField {
        x: gx.iter().zip(&cx).map(|(a, b)| a - b).collect(),
        y: gy.iter().zip(&cy).map(|(a, b)| a - b).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Rect;

    fn bump() -> GridDensity {
        GridDensity::from_fn(Rect::centered(Vec2::ZERO, 2.0), 32, 32, |p| {
            (-(p - Vec2::new(0.2, -0.1)).norm_sq() / 0.1).exp()
        })
        .unwrap()
    }

    #[test]
    fn no_drift_no_diffusion_is_identity() {
        let g = bump();
        let next = fokker_planck_step(&g, &DriftField::zeros(g.values.len()), 0.0, 0.01, Execution::Sequential).unwrap();
        assert_eq!(next, g);
    }

    #[test]
    fn rejects_steps_beyond_the_limit() {
        let g = bump();
        let d = DriftField::constant(g.values.len(), Vec2::new(1.0, 0.0));
        let lim = cfl_limit(&g, &d, 0.1);
        match fokker_planck_step(&g, &d, 0.1, 2.0 * lim, Execution::Sequential) {
            Err(Error::StepRejected { suggested_dt, .. }) => assert_eq!(suggested_dt, lim),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn mass_and_sign_preserved() {
        let mut g = bump();
        let cells = g.values.len();
        let d = DriftField {
            x: (0..cells).map(|c| ((c * 7) % 11) as f64 / 5.0 - 1.0).collect(),
            y: (0..cells).map(|c| ((c * 3) % 13) as f64 / 6.0 - 1.0).collect(),
        };
        let dt = cfl_limit(&g, &d, 0.05);
        for _ in 0..300 {
            g = fokker_planck_step(&g, &d, 0.05, dt, Execution::Sequential).unwrap();
            assert!((g.mass() - 1.0).abs() < 1e-12);
            assert!(g.min_value() >= 0.0);
        }
    }

    #[test]
    fn constant_drift_moves_the_mean() {
        let g = bump();
        let b = Vec2::new(0.3, -0.2);
        let d = DriftField::constant(g.values.len(), b);
        let dt = 0.5 * cfl_limit(&g, &d, 0.0);
        let next = fokker_planck_step(&g, &d, 0.0, dt, Execution::Sequential).unwrap();
        let moved = (next.mean() - g.mean()) / dt;
        assert!((moved - b).norm() < 1e-6, "{moved:?}");
    }

    #[test]
    fn parallel_step_is_bit_identical() {
        let g = bump();
        let d = DriftField::constant(g.values.len(), Vec2::new(0.4, 0.1));
        let a = fokker_planck_advance(&g, &d, 0.2, 0.05, Execution::Sequential).unwrap();
        let b = fokker_planck_advance(&g, &d, 0.2, 0.05, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.1 > 1);
    }
}
