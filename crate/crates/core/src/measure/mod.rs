//! Empirical measures, grid densities and Wasserstein-1 distances.

pub mod assignment;
mod grid;
mod paths;
mod sliced;

use serde::{Deserialize, Serialize};

use crate::config::KernelSpec;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::stochastic::{self, EntityClass, RandomStream, StreamKey};

pub use grid::{kernel_field_from_points, GridDensity, Rect};
pub use paths::{w1_alpha_paths, PathEnsemble};
pub use sliced::{w1_1d, w1_sliced};

/// Largest size handled by the dense assignment solver.
pub const MAX_EXACT: usize = 2048;

/// Largest `sinks × sources` cost matrix handed to the capacitated solver.
pub const MAX_TRANSPORT_ENTRIES: usize = 1 << 23;

/// Number of grid samplings averaged in grid-vs-empirical distances.
pub const GRID_SAMPLINGS: usize = 8;

/// Uniform-weight point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub points: Vec<Vec2>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empirical measure needs at least one point".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("point {i} is not finite")));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> Vec2 {
        crate::geometry::sum(self.points.iter().copied()) / self.len() as f64
    }
}

/// Either representation of a probability measure on the plane.
#[derive(Debug, Clone, Copy)]
pub enum MeasureRef<'a> {
    Empirical(&'a EmpiricalMeasure),
    Grid(&'a GridDensity),
}

/// `(K ∗ μ)(x)`: an exact sum over points, or midpoint quadrature over cells.
pub fn convolve(kernel: &KernelSpec, mu: MeasureRef<'_>, x: Vec2) -> Vec2 {
    match mu {
        MeasureRef::Empirical(m) => crate::dynamics::kernel_mean(kernel, x, &m.points),
        MeasureRef::Grid(g) => g.kernel_at(kernel, x),
    }
}

/// `n` i.i.d. draws from the grid density.
pub fn grid_sample(g: &GridDensity, n: usize, stream: &mut RandomStream) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid_sample needs n >= 1".into()));
    }
    Ok(g.sample(n, stream))
}

fn distance_matrix(rows: &[Vec2], cols: &[Vec2]) -> Vec<f64> {
    let mut cost = Vec::with_capacity(rows.len() * cols.len());
    for a in rows {
        for b in cols {
            cost.push((*a - *b).norm());
        }
    }
    cost
}

/// Exact W₁ between equal-size clouds by optimal assignment.
pub fn w1_exact(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    let n = mu.len();
    if n != nu.len() {
        return Err(Error::InvalidArgument(format!(
            "w1_exact needs equal sizes, got {} and {}",
            n,
            nu.len()
        )));
    }
    if n > MAX_EXACT {
        return Err(Error::InvalidArgument(format!("w1_exact supports n <= {MAX_EXACT}, got {n}")));
    }
    let (total, _) = assignment::min_cost_assignment(n, &distance_matrix(&mu.points, &nu.points));
    Ok(total / n as f64)
}

/// Exact W₁ between clouds whose sizes divide one another.
pub fn w1_transport(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    let (big, small) = if mu.len() >= nu.len() { (mu, nu) } else { (nu, mu) };
    if big.len() % small.len() != 0 {
        return Err(Error::InvalidArgument(format!(
            "w1_transport needs one size to divide the other, got {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    if big.len() == small.len() && big.len() <= MAX_EXACT {
        return w1_exact(mu, nu);
    }
    let cost = distance_matrix(&big.points, &small.points);
    let (total, _) = assignment::min_cost_capacitated(big.len(), small.len(), &cost);
    Ok(total / big.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum W1Method {
    Exact,
    Sliced { projections: usize },
}

/// A W₁ value labelled with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W1Estimate {
    pub value: f64,
    #[serde(flatten)]
    pub method: W1Method,
}

/// Exact W₁ when the sizes allow it, otherwise sliced W₁ with
/// `projections` directions drawn from `stream`.
pub fn w1_auto(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    projections: usize,
    stream: &mut RandomStream,
) -> Result<W1Estimate> {
    let (a, b) = (mu.len().max(nu.len()), mu.len().min(nu.len()));
    let exact = if a == b { a <= MAX_EXACT } else { a % b == 0 && a * b <= MAX_TRANSPORT_ENTRIES };
    if exact {
        Ok(W1Estimate { value: w1_transport(mu, nu)?, method: W1Method::Exact })
    } else {
        Ok(W1Estimate {
            value: w1_sliced(mu, nu, projections, stream)?,
            method: W1Method::Sliced { projections },
        })
    }
}

/// Distance between a grid density and an empirical measure, with the
/// sampling noise floor measured alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridW1 {
    /// Mean of `W₁(sample of g, μ)` over the samplings.
    pub value: f64,
    /// Mean of `W₁` between two independent samples of `g` of the same size.
    pub floor: f64,
    pub samplings: usize,
    #[serde(flatten)]
    pub method: W1Method,
}

/// Samples `g` at the size of `mu` [`GRID_SAMPLINGS`] times.
/// Sampling streams are keyed by `(seed, grid_sampling, 0|1, r)`.
pub fn w1_grid_empirical(g: &GridDensity, mu: &EmpiricalMeasure, seed: u64) -> Result<GridW1> {
    let n = mu.len();
    let mut value = 0.0;
    let mut floor = 0.0;
    let mut method = W1Method::Exact;
    for r in 0..GRID_SAMPLINGS as u64 {
        let mut s0 = stochastic::stream(StreamKey::new(seed, EntityClass::GridSampling, 0, r));
        let mut s1 = stochastic::stream(StreamKey::new(seed, EntityClass::GridSampling, 1, r));
        let mut proj = stochastic::stream(StreamKey::new(seed, EntityClass::SlicedW1, 0, r));
        let a = g.sample(n, &mut s0);
        let b = g.sample(n, &mut s1);
        let d = w1_auto(&a, mu, 256, &mut proj)?;
        let f = w1_auto(&a, &b, 256, &mut proj)?;
        value += d.value;
        floor += f.value;
        method = d.method;
    }
    let k = GRID_SAMPLINGS as f64;
    Ok(GridW1 { value: value / k, floor: floor / k, samplings: GRID_SAMPLINGS, method })
}
