//! Convergence sweeps over the pirate count `M` and the commercial count `N`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::control::{cost_averaged, control_energy, AveragedBackend, CostReport, PiecewiseConstantControl};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::meanfield::{self, AveragedRun, GridSpec};
use crate::measure::{self, EmpiricalMeasure, W1Method};
use crate::micro;
use crate::par;
use crate::stochastic::{self, EntityClass, StreamKey};

/// Normal quantile of the reported 95% intervals.
const Z95: f64 = 1.96;

/// `nodes` indices spread evenly over `0..=steps`, both ends included.
pub fn time_node_indices(steps: usize, nodes: usize) -> Vec<usize> {
    let nodes = nodes.max(2);
    let mut idx: Vec<usize> = (0..nodes)
        .map(|j| ((j as f64) * steps as f64 / (nodes - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn mean_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

fn w1(a: &[Vec2], b: &[Vec2], seed: u64, tag: u64) -> Result<f64> {
    let mut s = stochastic::stream(StreamKey::new(seed, EntityClass::SlicedW1, tag, 0));
    let est = measure::w1_auto(
        &EmpiricalMeasure::new(a.to_vec())?,
        &EmpiricalMeasure::new(b.to_vec())?,
        256,
        &mut s,
    )?;
    if let W1Method::Sliced { projections } = est.method {
        log::debug!("sliced W1 with {projections} projections for sizes {} and {}", a.len(), b.len());
    }
    Ok(est.value)
}

/// One row of the `M` sweep; `*_ci` are 95% half-widths over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MSweepRow {
    pub m: usize,
    /// `E max_n sup_t |X^M_n(t) - X̄_n(t)|`.
    pub traj_dev: f64,
    pub traj_dev_ci: f64,
    /// `∫ E W₁(ν^p_M(t), μ̄^p(t)) dt` (trapezoid over the time nodes).
    pub w1_integral: f64,
    pub w1_integral_ci: f64,
    /// Time integral of `W₁` between the two halves of the reference ensemble.
    pub w1_floor: f64,
    /// Mean microscopic cost over the replications.
    pub cost_micro: f64,
    pub cost_micro_ci: f64,
    /// `|J_{N,M} - J_N|`.
    pub cost_gap: f64,
    /// `ci(J_{N,M}) + ci(J_N)`.
    pub cost_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSweep {
    pub rows: Vec<MSweepRow>,
    pub reference_cost: CostReport,
    pub reference_samples: usize,
    pub replications: usize,
    pub time_nodes: Vec<f64>,
}

impl MSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "M,traj_dev,traj_dev_ci,w1_integral,w1_integral_ci,w1_floor,J_NM,J_NM_ci,J_N,cost_gap,ci,cost_floor\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.m,
                r.traj_dev,
                r.traj_dev_ci,
                r.w1_integral,
                r.w1_integral_ci,
                r.w1_floor,
                r.cost_micro,
                r.cost_micro_ci,
                self.reference_cost.value,
                r.cost_gap,
                r.cost_micro_ci,
                r.cost_floor
            );
        }
        out
    }
}

/// Runs the `M → ∞` sweep with microscopic replications `0..replications`
/// against one reference ensemble of `reference_k` paths.
pub fn converge_m(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    m_values: &[usize],
    replications: usize,
    reference_k: usize,
    time_nodes: usize,
    master_seed: u64,
) -> Result<MSweep> {
    let reference = meanfield::simulate_averaged(cfg, control, reference_k, master_seed)?;
    let reference_cost = cost_averaged(cfg, control, AveragedBackend::Mc { samples: reference_k }, master_seed)?;
    let nodes = time_node_indices(cfg.numerics.steps, time_nodes);
    let node_times: Vec<f64> = nodes.iter().map(|&k| reference.times[k]).collect();

    let half = reference_k / 2;
    let w1_floor = if half > 0 {
        let per_node = nodes
            .iter()
            .map(|&k| {
                let s = reference.law.slice(k);
                w1(&s[..half], &s[half..2 * half], master_seed, k as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        trapezoid(&node_times, &per_node)
    } else {
        0.0
    };

    let mut rows = Vec::with_capacity(m_values.len());
    for &m in m_values {
        let mut mcfg = cfg.clone();
        mcfg.n_pirates = m;
        let per_rep = par::map_range(cfg.numerics.execution, replications, |r| {
            rep_stats(&mcfg, control, &reference, &nodes, &node_times, master_seed, r as u64)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let devs: Vec<f64> = per_rep.iter().map(|r| r.0).collect();
        let w1s: Vec<f64> = per_rep.iter().map(|r| r.1).collect();
        let costs: Vec<f64> = per_rep.iter().map(|r| r.2 + control_energy(control)).collect();
        let (traj_dev, traj_dev_ci) = mean_ci(&devs);
        let (w1_integral, w1_integral_ci) = mean_ci(&w1s);
        let (cost_micro, cost_micro_ci) = mean_ci(&costs);
        rows.push(MSweepRow {
            m,
            traj_dev,
            traj_dev_ci,
            w1_integral,
            w1_integral_ci,
            w1_floor,
            cost_micro,
            cost_micro_ci,
            cost_gap: (cost_micro - reference_cost.value).abs(),
            cost_floor: cost_micro_ci + reference_cost.ci_halfwidth,
        });
    }
    Ok(MSweep {
        rows,
        reference_cost,
        reference_samples: reference_k,
        replications,
        time_nodes: node_times,
    })
}

/// `(max trajectory deviation, ∫W₁, contact integral)` of one replication.
fn rep_stats(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    reference: &AveragedRun,
    nodes: &[usize],
    node_times: &[f64],
    master_seed: u64,
    replication: u64,
) -> Result<(f64, f64, f64)> {
    let steps = cfg.numerics.steps;
    let mut dev = 0.0f64;
    let mut contact = 0.0;
    let mut slices = Vec::with_capacity(nodes.len());
    let mut k = 0;
    micro::integrate(cfg, control, master_seed, replication, |s| {
        for (x, xb) in s.x.iter().zip(&reference.commercial[k]) {
            dev = dev.max((*x - *xb).norm());
        }
        if k < steps {
            contact += micro::contact_rate(s, cfg);
        }
        if nodes.contains(&k) {
            slices.push(s.y.clone());
        }
        k += 1;
    })?;
    let w1s = nodes
        .iter()
        .zip(&slices)
        .map(|(&k, y)| w1(y, &reference.law.slice(k), master_seed, k as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok((dev, trapezoid(node_times, &w1s), contact * cfg.dt()))
}

/// One row of the `N` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NSweepRow {
    pub n: usize,
    /// `sup_t W₁(ν^c_N(t), μ^c(t))` over the time nodes.
    pub sup_w1: f64,
    /// Same distance between the particle solutions at `n_part` and `n_part/2`.
    pub w1_floor: f64,
    /// `J_N` from the grid backend.
    pub cost_averaged: f64,
    /// `|J_N - J|`.
    pub cost_gap: f64,
    /// `|J(n_part) - J(n_part/2)|`.
    pub cost_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSweep {
    pub rows: Vec<NSweepRow>,
    pub meanfield_cost: CostReport,
    pub meanfield_cost_half: CostReport,
    pub particles: usize,
    pub time_nodes: Vec<f64>,
}

impl NSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,sup_w1,w1_floor,J_N,J,cost_gap,cost_floor\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n, r.sup_w1, r.w1_floor, r.cost_averaged, self.meanfield_cost.value, r.cost_gap, r.cost_floor
            );
        }
        out
    }
}

/// Runs the `N → ∞` sweep: the grid backend of the averaged model with `N`
/// ships against the mean-field solution with `n_part` particles.
pub fn converge_n(
    cfg: &ModelConfig,
    control: &PiecewiseConstantControl,
    n_values: &[usize],
    n_part: usize,
    time_nodes: usize,
) -> Result<NSweep> {
    let grid = GridSpec::from_config(cfg);
    let fine = meanfield::simulate_meanfield(cfg, control, n_part, grid)?;
    let coarse = meanfield::simulate_meanfield(cfg, control, (n_part / 2).max(1), grid)?;
    let energy = control_energy(control);
    let report = |contact: f64| CostReport {
        value: energy + contact,
        control_energy: energy,
        contact_term: contact,
        ci_halfwidth: 0.0,
        replications: 1,
    };
    let meanfield_cost = report(fine.contact_integral());
    let meanfield_cost_half = report(coarse.contact_integral());
    let nodes = time_node_indices(cfg.numerics.steps, time_nodes);
    let node_times: Vec<f64> = nodes.iter().map(|&k| fine.times[k]).collect();

    let mut w1_floor = 0.0f64;
    for &k in &nodes {
        w1_floor = w1_floor.max(w1(&fine.commercial[k], &coarse.commercial[k], 0, k as u64)?);
    }
    let cost_floor = (meanfield_cost.value - meanfield_cost_half.value).abs();

    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let mut ncfg = cfg.clone();
        ncfg.n_commercial = n;
        let run = meanfield::simulate_averaged_grid(&ncfg, control)?;
        let mut sup_w1 = 0.0f64;
        for &k in &nodes {
            sup_w1 = sup_w1.max(w1(&run.commercial[k], &fine.commercial[k], 0, k as u64)?);
        }
        let cost = energy + run.contact_integral();
        rows.push(NSweepRow {
            n,
            sup_w1,
            w1_floor,
            cost_averaged: cost,
            cost_gap: (cost - meanfield_cost.value).abs(),
            cost_floor,
        });
    }
    Ok(NSweep {
        rows,
        meanfield_cost,
        meanfield_cost_half,
        particles: n_part,
        time_nodes: node_times,
    })
}

/// `true` when every successive value either decreases or sits at or below
/// its noise floor.
pub fn decreasing_above_floor(values: &[f64], floors: &[f64]) -> bool {
    values
        .windows(2)
        .zip(floors.windows(2))
        .all(|(v, f)| v[1] < v[0] || v[1] <= f[1])
}

/// `true` when the sequence is strictly decreasing.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|v| v[1] < v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_indices() {
        assert_eq!(time_node_indices(512, 5), vec![0, 128, 256, 384, 512]);
        assert_eq!(time_node_indices(4, 9), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn trend_rules() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
        assert!(decreasing_above_floor(&[3.0, 1.0, 1.2], &[0.5, 0.5, 1.5]));
        assert!(!decreasing_above_floor(&[3.0, 1.0, 1.2], &[0.5, 0.5, 0.5]));
    }
}
