//! Drift terms shared by the microscopic, averaged and mean-field solvers.
//!
//! Keeping a single implementation guarantees that the guard trajectories of
//! all three models are bit-identical under the same control.

use crate::config::{KernelSpec, ModelConfig};
use crate::geometry::Vec2;
use crate::par::{self, Execution};

/// How the congestion sum is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityNorm {
    /// `1/(N-1)` for `N ≥ 2` ships; zero density for a lone ship.
    Ships,
    /// `1/n` over equal-mass particles (the `N → ∞` object).
    Particles,
}

impl DensityNorm {
    pub fn scale(self, n: usize) -> f64 {
        match self {
            DensityNorm::Ships if n < 2 => 0.0,
            DensityNorm::Ships => 1.0 / (n - 1) as f64,
            DensityNorm::Particles => 1.0 / n as f64,
        }
    }
}

/// Congestion density seen by `points[i]`.
pub fn congestion_density(i: usize, points: &[Vec2], norm: DensityNorm, cfg: &ModelConfig) -> f64 {
    let scale = norm.scale(points.len());
    if scale == 0.0 {
        return 0.0;
    }
    let xi = points[i];
    let forward = forward_of(cfg, xi);
    let mut acc = 0.0;
    for (j, xj) in points.iter().enumerate() {
        if j != i {
            acc += cfg.congestion.eta(xi - *xj, forward);
        }
    }
    acc * scale
}

#[inline]
fn forward_of(cfg: &ModelConfig, x: Vec2) -> Vec2 {
    if cfg.congestion.route_offset == 0.0 {
        Vec2::ZERO
    } else {
        cfg.route.eval(x)
    }
}

/// Congestion speed `v(density_i)` for every point.
///
/// The sequential isotropic path visits each unordered pair once; pairwise
/// terms are symmetric bit-for-bit and every row is still accumulated in
/// ascending partner order, so it agrees exactly with the row-wise path.
pub fn speed_factors(points: &[Vec2], norm: DensityNorm, cfg: &ModelConfig, exec: Execution) -> Vec<f64> {
    let n = points.len();
    let scale = norm.scale(n);
    let c = &cfg.congestion;
    if scale == 0.0 {
        return vec![c.velocity(0.0); n];
    }
    let densities: Vec<f64> = if c.route_offset == 0.0 && !exec.is_parallel() {
        let mut acc = vec![0.0; n];
        for i in 0..n {
            let xi = points[i];
            for j in (i + 1)..n {
                let e = c.eta(xi - points[j], Vec2::ZERO);
                acc[i] += e;
                acc[j] += e;
            }
        }
        acc
    } else {
        par::map_range(exec, n, |i| {
            let xi = points[i];
            let forward = forward_of(cfg, xi);
            let mut acc = 0.0;
            for (j, xj) in points.iter().enumerate() {
                if j != i {
                    acc += c.eta(xi - *xj, forward);
                }
            }
            acc
        })
    };
    densities.into_iter().map(|d| c.velocity(d * scale)).collect()
}

/// `(1/n)·Σ_p K(x - p)`.
#[inline]
pub fn kernel_mean(kernel: &KernelSpec, x: Vec2, points: &[Vec2]) -> Vec2 {
    if kernel.is_null() || points.is_empty() {
        return Vec2::ZERO;
    }
    let mut acc = Vec2::ZERO;
    for p in points {
        acc += kernel.eval(x - *p);
    }
    acc / points.len() as f64
}

/// `v·(r(x) + push)`.
#[inline]
pub fn commercial_velocity(cfg: &ModelConfig, x: Vec2, speed: f64, push: Vec2) -> Vec2 {
    (cfg.route.eval(x) + push) * speed
}

/// Guard drift `(1/L)·Σ K^gg(z_ℓ - z_ℓ') + u_ℓ`, the self term included.
#[inline]
pub fn guard_velocity(cfg: &ModelConfig, l: usize, z: &[Vec2], u: &[Vec2]) -> Vec2 {
    kernel_mean(&cfg.kernels.gg, z[l], z) + u[l]
}

/// Pirate drift against explicit ship positions:
/// `(1/L)·Σ K^pg(y - z_ℓ) - (1/N)·Σ K^pc(y - x_n)`.
#[inline]
pub fn pirate_velocity(cfg: &ModelConfig, y: Vec2, z: &[Vec2], ships: &[Vec2]) -> Vec2 {
    kernel_mean(&cfg.kernels.pg, y, z) - kernel_mean(&cfg.kernels.pc, y, ships)
}

/// One explicit Euler step of the guard system.
pub fn advance_guards(cfg: &ModelConfig, z: &[Vec2], u: &[Vec2], dt: f64) -> Vec<Vec2> {
    (0..z.len())
        .map(|l| z[l] + guard_velocity(cfg, l, z, u) * dt)
        .collect()
}

/// Index of the first non-finite point, if any.
pub fn first_non_finite(points: &[Vec2]) -> Option<usize> {
    points.iter().position(|p| !p.is_finite())
}
