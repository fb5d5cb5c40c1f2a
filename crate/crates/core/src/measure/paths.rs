use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

use super::{assignment, MAX_EXACT};

/// Sample paths on a shared time grid: `paths[i][k]` is path `i` at `times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    pub paths: Vec<Vec<Vec2>>,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Positions of every path at time index `k`.
    pub fn slice(&self, k: usize) -> Vec<Vec2> {
        self.paths.iter().map(|p| p[k]).collect()
    }
}

/// Exact W₁ between path ensembles under `sup_k e^{-α t_k}·|a(t_k) - b(t_k)|`.
pub fn w1_alpha_paths(a: &PathEnsemble, b: &PathEnsemble, alpha: f64) -> Result<f64> {
    if a.times != b.times {
        return Err(Error::InvalidArgument("path ensembles use different time grids".into()));
    }
    let n = a.len();
    if n != b.len() || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "path ensembles need equal nonzero sizes, got {} and {}",
            n,
            b.len()
        )));
    }
    if n > MAX_EXACT {
        return Err(Error::InvalidArgument(format!("at most {MAX_EXACT} paths supported")));
    }
    let k = a.times.len();
    if a.paths.iter().chain(&b.paths).any(|p| p.len() != k) {
        return Err(Error::InvalidArgument("path length differs from the time grid".into()));
    }
    let weights: Vec<f64> = a.times.iter().map(|t| (-alpha * t).exp()).collect();
    let mut cost = Vec::with_capacity(n * n);
    for pa in &a.paths {
        for pb in &b.paths {
            let d = pa
                .iter()
                .zip(pb)
                .zip(&weights)
                .map(|((x, y), w)| w * (*x - *y).norm())
                .fold(0.0, f64::max);
            cost.push(d);
        }
    }
    let (total, _) = assignment::min_cost_assignment(n, &cost);
    Ok(total / n as f64)
}
