use serde::{Deserialize, Serialize};

use crate::config::{ControlSetSpec, OptimizeOptions};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

use super::{project, CostReport, PiecewiseConstantControl};

/// Settings of the projected gradient method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    /// Central-difference step.
    pub fd_step: f64,
    /// Stop once an accepted step lowers the value by at most `tol·max(1, |J|)`.
    pub tol: f64,
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 20,
            fd_step: 1e-3,
            tol: 1e-8,
            armijo: 1e-4,
            max_halvings: 20,
        }
    }
}

impl From<&OptimizeOptions> for OptimizerOptions {
    fn from(o: &OptimizeOptions) -> Self {
        Self {
            max_iters: o.max_iters,
            fd_step: o.fd_step,
            tol: o.tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizeOutcome {
    /// Zero projected gradient or a decrease below tolerance.
    Converged,
    MaxIterations,
    /// Backtracking found no decrease.
    Stalled,
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iter: usize,
    #[serde(flatten)]
    pub report: CostReport,
    /// Accepted step length (0 for the starting point).
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub control: PiecewiseConstantControl,
    pub history: Vec<HistoryEntry>,
    pub outcome: OptimizeOutcome,
    pub evaluations: usize,
}

/// Central-difference gradient in the layout of
/// [`PiecewiseConstantControl::to_flat`]. Every probe uses `master_seed`.
pub fn fd_gradient<F>(cost: &F, u: &PiecewiseConstantControl, h: f64, master_seed: u64, exec: Execution) -> Result<Vec<f64>>
where
    F: Fn(&PiecewiseConstantControl, u64) -> Result<CostReport> + Sync,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("fd step must be > 0, got {h}")));
    }
    let base = u.to_flat();
    let probes = par::map_range(exec, 2 * base.len(), |p| {
        let mut flat = base.clone();
        flat[p / 2] += if p % 2 == 0 { h } else { -h };
        cost(&u.from_flat(&flat), master_seed).map(|r| r.value)
    });
    let values = probes.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(values.chunks_exact(2).map(|c| (c[0] - c[1]) / (2.0 * h)).collect())
}

/// Projected gradient descent with Armijo backtracking from step 1.
pub fn optimize<F>(
    cost: &F,
    u0: &PiecewiseConstantControl,
    set: &ControlSetSpec,
    opts: &OptimizerOptions,
    master_seed: u64,
    exec: Execution,
) -> Result<OptimizeResult>
where
    F: Fn(&PiecewiseConstantControl, u64) -> Result<CostReport> + Sync,
{
    if !u0.is_feasible(set) {
        return Err(Error::InvalidArgument("initial control is outside the control set".into()));
    }
    let mut u = u0.clone();
    let mut current = cost(&u, master_seed)?;
    let mut evaluations = 1;
    let mut history = vec![HistoryEntry { iter: 0, report: current, step: 0.0 }];
    let mut outcome = OptimizeOutcome::MaxIterations;

    for iter in 1..=opts.max_iters {
        let grad = fd_gradient(cost, &u, opts.fd_step, master_seed, exec)?;
        evaluations += 2 * grad.len();
        let flat = u.to_flat();
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let raw: Vec<f64> = flat.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
            let cand = project(&u.from_flat(&raw).values, u.horizon, set)?;
            let cand_flat = cand.to_flat();
            let slope: f64 = grad.iter().zip(cand_flat.iter().zip(&flat)).map(|(g, (c, x))| g * (c - x)).sum();
            if slope == 0.0 {
                break;
            }
            let report = cost(&cand, master_seed)?;
            evaluations += 1;
            if report.value <= current.value + opts.armijo * slope {
                accepted = Some((cand, report));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, report)) => {
                let decrease = current.value - report.value;
                u = cand;
                current = report;
                history.push(HistoryEntry { iter, report, step });
                if decrease <= opts.tol * current.value.abs().max(1.0) {
                    outcome = OptimizeOutcome::Converged;
                    break;
                }
            }
            None if step == 1.0 => {
                // The projected gradient vanished on the first trial.
                outcome = OptimizeOutcome::Converged;
                break;
            }
            None => {
                log::warn!("optimizer stalled at iteration {iter}: no decrease after {} halvings", opts.max_halvings);
                outcome = OptimizeOutcome::Stalled;
                break;
            }
        }
    }
    Ok(OptimizeResult { control: u, history, outcome, evaluations })
}
