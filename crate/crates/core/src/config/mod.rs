//! Model ingredients, numerical settings and their JSON representation.

mod constants;
mod kernels;
mod load;

pub use constants::{lipschitz_constants, ConstantsReport};
pub use kernels::{
    eval_danger, eval_eta, eval_kernel, eval_route, eval_velocity, CongestionSpec,
    DangerKernelSpec, KernelFamily, KernelSign, KernelSpec, RouteFamily, RouteFieldSpec,
};
pub use load::{
    apply_override, load_config, load_config_with_overrides, parse_config,
    parse_config_with_overrides,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Violation;
use crate::geometry::Vec2;
use crate::par::Execution;
use kernels::violation;

/// The four pairwise interaction kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernels {
    /// Effect of pirates on commercial ships, applied as `K(x - y)`.
    pub cp: KernelSpec,
    /// Effect of guards on pirates, applied as `K(y - z)`.
    pub pg: KernelSpec,
    /// Effect of commercial ships on pirates, applied as `-K(y - x)`; a
    /// repulsive-signed kernel therefore attracts pirates to ships.
    pub pc: KernelSpec,
    /// Guard-guard interaction, applied as `K(z - z')`.
    pub gg: KernelSpec,
}

/// Compact box `[-u_max, u_max]^{2×L}` of admissible guard controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSetSpec {
    pub u_max: f64,
    pub guards: usize,
}

impl ControlSetSpec {
    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(-self.u_max, self.u_max)
    }

    pub fn contains(&self, u: Vec2) -> bool {
        u.x.abs() <= self.u_max && u.y.abs() <= self.u_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBounds {
    pub u_max: f64,
}

/// Law of the i.i.d. initial pirate positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDistSpec {
    PointMass { at: Vec2 },
    UniformDisk { center: Vec2, radius: f64 },
    Gaussian { center: Vec2, std: f64 },
}

impl InitialDistSpec {
    pub fn center(&self) -> Vec2 {
        match *self {
            InitialDistSpec::PointMass { at } => at,
            InitialDistSpec::UniformDisk { center, .. } | InitialDistSpec::Gaussian { center, .. } => center,
        }
    }

    /// Radius around [`Self::center`] holding all but a negligible part of the mass.
    pub fn effective_radius(&self) -> f64 {
        match *self {
            InitialDistSpec::PointMass { .. } => 0.0,
            InitialDistSpec::UniformDisk { radius, .. } => radius,
            InitialDistSpec::Gaussian { std, .. } => 6.0 * std,
        }
    }

    /// `E|Y⁰|`, finite for every shipped family; Gaussian uses the bound `|c| + s√(π/2)`.
    pub fn first_moment_bound(&self) -> f64 {
        match *self {
            InitialDistSpec::PointMass { at } => at.norm(),
            InitialDistSpec::UniformDisk { center, radius } => center.norm() + radius,
            InitialDistSpec::Gaussian { center, std } => {
                center.norm() + std * (std::f64::consts::PI / 2.0).sqrt()
            }
        }
    }

    /// Whether the law has a density with finite entropy.
    pub fn has_density(&self) -> bool {
        !matches!(self, InitialDistSpec::PointMass { .. })
    }

    fn validate(&self, key: &str, out: &mut Vec<Violation>) {
        match *self {
            InitialDistSpec::PointMass { at } => {
                if !at.is_finite() {
                    out.push(violation(format!("{key}.at"), "must be finite"));
                }
            }
            InitialDistSpec::UniformDisk { center, radius } => {
                if !center.is_finite() {
                    out.push(violation(format!("{key}.center"), "must be finite"));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    out.push(violation(format!("{key}.radius"), "must be finite and > 0"));
                }
            }
            InitialDistSpec::Gaussian { center, std } => {
                if !center.is_finite() {
                    out.push(violation(format!("{key}.center"), "must be finite"));
                }
                if !(std > 0.0 && std.is_finite()) {
                    out.push(violation(format!("{key}.std"), "must be finite and > 0"));
                }
            }
        }
    }
}

/// Deterministic commercial layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommercialInit {
    /// Explicit positions; their count must equal `N`.
    Points { points: Vec<Vec2> },
    /// Golden-angle spiral filling a disk, well defined for any count.
    Sunflower { center: Vec2, radius: f64 },
}

impl CommercialInit {
    /// Positions for `n` ships (or particles). The `points` layout is repeated
    /// cyclically when `n` exceeds its length.
    pub fn positions(&self, n: usize) -> Vec<Vec2> {
        match self {
            CommercialInit::Points { points } => {
                (0..n).map(|i| points[i % points.len()]).collect()
            }
            CommercialInit::Sunflower { center, radius } => sunflower(*center, *radius, n),
        }
    }

    /// `R₀` such that every position lies in the closed ball of that radius.
    pub fn radius_bound(&self) -> f64 {
        match self {
            CommercialInit::Points { points } => {
                points.iter().map(|p| p.norm()).fold(0.0, f64::max)
            }
            CommercialInit::Sunflower { center, radius } => center.norm() + radius,
        }
    }
}

/// `n` points of a golden-angle spiral in the disk `B(center, radius)`.
pub fn sunflower(center: Vec2, radius: f64, n: usize) -> Vec<Vec2> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let r = radius * ((k as f64 + 0.5) / n as f64).sqrt();
            let a = k as f64 * golden;
            center + Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub commercial: CommercialInit,
    pub pirates: InitialDistSpec,
    pub guards: Vec<Vec2>,
}

/// Discretisation and sampling sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Time steps over `[0, T]`.
    pub steps: usize,
    /// Cells of the piecewise-constant control; must divide `steps`.
    pub control_cells: usize,
    pub grid_nx: usize,
    pub grid_ny: usize,
    /// Commercial particles in the mean-field solver.
    pub particles: usize,
    /// Sample paths approximating the averaged pirate law.
    pub ensemble: usize,
    /// Monte Carlo replications for expected costs.
    pub replications: usize,
    pub execution: Execution,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            steps: 512,
            control_cells: 16,
            grid_nx: 64,
            grid_ny: 64,
            particles: 1024,
            ensemble: 256,
            replications: 16,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Micro,
    AveragedMc,
    AveragedGrid,
    Meanfield,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeOptions {
    pub cost: CostKind,
    pub max_iters: usize,
    pub fd_step: f64,
    pub tol: f64,
    /// Constant starting control applied to every guard and cell.
    pub initial: Vec2,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            cost: CostKind::AveragedGrid,
            max_iters: 20,
            fd_step: 1e-3,
            tol: 1e-8,
            initial: Vec2::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub m_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub reference_ensemble: usize,
    pub reference_particles: usize,
    pub time_nodes: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            m_values: vec![8, 32, 128],
            n_values: vec![4, 16, 64],
            replications: 8,
            reference_ensemble: 1024,
            reference_particles: 1024,
            time_nodes: 5,
        }
    }
}

/// Full model description plus numerical settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "N")]
    pub n_commercial: usize,
    #[serde(rename = "M")]
    pub n_pirates: usize,
    #[serde(rename = "L")]
    pub n_guards: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub kappa: f64,
    pub kernels: Kernels,
    pub danger: DangerKernelSpec,
    pub congestion: CongestionSpec,
    pub route: RouteFieldSpec,
    pub control_set: ControlBounds,
    pub initial: InitialData,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub optimize: OptimizeOptions,
    #[serde(default)]
    pub sweep: SweepOptions,
}

impl ModelConfig {
    pub fn control_set(&self) -> ControlSetSpec {
        ControlSetSpec {
            u_max: self.control_set.u_max,
            guards: self.n_guards,
        }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.numerics.steps as f64
    }

    pub fn commercial_positions(&self) -> Vec<Vec2> {
        self.initial.commercial.positions(self.n_commercial)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Every violated constraint, keyed by dotted path.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (key, n) in [("N", self.n_commercial), ("M", self.n_pirates), ("L", self.n_guards)] {
            if n == 0 {
                out.push(violation(key, "must be >= 1"));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(violation("T", "must be finite and > 0"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            out.push(violation("kappa", "must be finite and > 0"));
        }
        self.kernels.cp.validate("kernels.cp", &mut out);
        self.kernels.pg.validate("kernels.pg", &mut out);
        self.kernels.pc.validate("kernels.pc", &mut out);
        self.kernels.gg.validate("kernels.gg", &mut out);
        self.danger.validate("danger", &mut out);
        self.congestion.validate("congestion", &mut out);
        self.route.validate("route", &mut out);
        if !(self.control_set.u_max >= 0.0 && self.control_set.u_max.is_finite()) {
            out.push(violation("control_set.u_max", "must be finite and >= 0"));
        }
        match &self.initial.commercial {
            CommercialInit::Points { points } => {
                if points.len() != self.n_commercial {
                    out.push(violation("initial.commercial.points", "count must equal N"));
                }
                if points.iter().any(|p| !p.is_finite()) {
                    out.push(violation("initial.commercial.points", "must be finite"));
                }
            }
            CommercialInit::Sunflower { center, radius } => {
                if !center.is_finite() {
                    out.push(violation("initial.commercial.center", "must be finite"));
                }
                if !(*radius >= 0.0 && radius.is_finite()) {
                    out.push(violation("initial.commercial.radius", "must be finite and >= 0"));
                }
            }
        }
        self.initial.pirates.validate("initial.pirates", &mut out);
        if self.initial.guards.len() != self.n_guards {
            out.push(violation("initial.guards", "count must equal L"));
        }
        if self.initial.guards.iter().any(|p| !p.is_finite()) {
            out.push(violation("initial.guards", "must be finite"));
        }
        let nm = &self.numerics;
        if nm.steps == 0 {
            out.push(violation("numerics.steps", "must be >= 1"));
        }
        if nm.control_cells == 0 || !nm.steps.is_multiple_of(nm.control_cells.max(1)) {
            out.push(violation("numerics.control_cells", "must divide numerics.steps"));
        }
        for (key, n) in [
            ("numerics.grid_nx", nm.grid_nx),
            ("numerics.grid_ny", nm.grid_ny),
            ("numerics.particles", nm.particles),
            ("numerics.ensemble", nm.ensemble),
            ("numerics.replications", nm.replications),
        ] {
            if n == 0 {
                out.push(violation(key, "must be >= 1"));
            }
        }
        let op = &self.optimize;
        if !(op.fd_step > 0.0 && op.fd_step.is_finite()) {
            out.push(violation("optimize.fd_step", "must be finite and > 0"));
        }
        if !(op.tol >= 0.0) {
            out.push(violation("optimize.tol", "must be >= 0"));
        }
        let sw = &self.sweep;
        if sw.replications == 0 {
            out.push(violation("sweep.replications", "must be >= 1"));
        }
        if sw.time_nodes < 2 {
            out.push(violation("sweep.time_nodes", "must be >= 2"));
        }
        out
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.initial.pirates.has_density() {
            w.push(
                "initial pirate law is a point mass: it has no density, so the grid backend \
                 starts from a one-cell indicator"
                    .to_string(),
            );
        }
        let c = lipschitz_constants(self);
        if self.dt() > 0.1 / c.drift_lipschitz.max(f64::MIN_POSITIVE) {
            w.push(format!(
                "dt = {} exceeds 0.1 / drift Lipschitz bound ({})",
                self.dt(),
                0.1 / c.drift_lipschitz
            ));
        }
        w
    }

    /// The shipped default configuration (`configs/default.json`).
    pub fn default_scenario() -> Self {
        parse_config(DEFAULT_CONFIG_JSON).expect("shipped default config is valid")
    }
}

pub const DEFAULT_CONFIG_JSON: &str = include_str!("../../../../configs/default.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sunflower_stays_in_disk() {
        let pts = sunflower(Vec2::new(1.0, -2.0), 0.5, 300);
        assert_eq!(pts.len(), 300);
        assert!(pts.iter().all(|p| (*p - Vec2::new(1.0, -2.0)).norm() <= 0.5));
    }

    #[test]
    fn default_scenario_is_valid() {
        let cfg = ModelConfig::default_scenario();
        assert!(cfg.validate().is_empty());
        assert_eq!((cfg.n_commercial, cfg.n_pirates, cfg.n_guards), (8, 16, 2));
    }

    #[test]
    fn validation_names_keys() {
        let mut cfg = ModelConfig::default_scenario();
        cfg.kappa = -1.0;
        cfg.numerics.control_cells = 7;
        let v = cfg.validate();
        let keys: Vec<_> = v.iter().map(|v| v.key.as_str()).collect();
        assert!(keys.contains(&"kappa"));
        assert!(keys.contains(&"numerics.control_cells"));
    }
}
