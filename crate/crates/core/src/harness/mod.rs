//! Experiment drivers behind the command-line front end.

mod sweeps;
mod validate;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{self, ModelConfig};
use crate::control::{self, CostFunctional, OptimizerOptions, PiecewiseConstantControl};
use crate::error::{Error, Result, Violation};
use crate::io::{self, ArtifactRecord, ArtifactWriter};
use crate::meanfield::{self, GridSpec};
use crate::measure::{self, EmpiricalMeasure};
use crate::micro;
use crate::stochastic::RunMetadata;

pub use sweeps::{
    converge_m, converge_n, decreasing_above_floor, strictly_decreasing, time_node_indices, MSweep, MSweepRow,
    NSweep, NSweepRow,
};
pub use validate::{validate_suite, CheckResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SimulateMicro,
    SimulateAveraged,
    SimulateMeanfield,
    Optimize,
    ConvergeM,
    ConvergeN,
    Validate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SimulateMicro => "simulate_micro",
            ExperimentKind::SimulateAveraged => "simulate_averaged",
            ExperimentKind::SimulateMeanfield => "simulate_meanfield",
            ExperimentKind::Optimize => "optimize",
            ExperimentKind::ConvergeM => "converge_m",
            ExperimentKind::ConvergeN => "converge_n",
            ExperimentKind::Validate => "validate",
        }
    }
}

/// Everything needed to run (and rerun) one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// `None` uses the built-in default scenario.
    pub config_path: Option<PathBuf>,
    /// Dotted-key overrides applied in order.
    pub overrides: Vec<(String, String)>,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub steps: usize,
    pub dt: f64,
    pub control_cells: usize,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub particles: usize,
    pub ensemble: usize,
    pub replications: usize,
}

impl Discretization {
    fn of(cfg: &ModelConfig) -> Self {
        let n = &cfg.numerics;
        Self {
            steps: n.steps,
            dt: cfg.dt(),
            control_cells: n.control_cells,
            grid_nx: n.grid_nx,
            grid_ny: n.grid_ny,
            particles: n.particles,
            ensemble: n.ensemble,
            replications: n.replications,
        }
    }
}

/// Written last into every output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ExperimentKind,
    pub status: String,
    pub config_hash: String,
    pub config: ModelConfig,
    pub overrides: Vec<(String, String)>,
    #[serde(flatten)]
    pub metadata: RunMetadata,
    pub discretization: Discretization,
    pub noise_floor: BTreeMap<String, f64>,
    pub artifacts: Vec<ArtifactRecord>,
    pub warnings: Vec<String>,
}

/// Machine-readable failure description (`error.json`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    pub violations: Vec<Violation>,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
            exit_code: e.exit_code(),
            violations: e.violations().to_vec(),
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: Option<Manifest>,
    pub error: Option<ErrorRecord>,
}

pub fn load_spec_config(spec: &ExperimentSpec) -> Result<ModelConfig> {
    match &spec.config_path {
        Some(p) => config::load_config_with_overrides(p, &spec.overrides),
        None => config::parse_config_with_overrides(config::DEFAULT_CONFIG_JSON, &spec.overrides),
    }
}

/// Runs the experiment, writing artifacts and a manifest (or `error.json`)
/// into the output directory.
pub fn run(spec: &ExperimentSpec) -> RunOutcome {
    match run_inner(spec) {
        Ok(manifest) => {
            let code = if manifest.status == "ok" { 0 } else { 4 };
            RunOutcome { exit_code: code, manifest: Some(manifest), error: None }
        }
        Err(e) => {
            let record = ErrorRecord::from(&e);
            if let Ok(mut w) = ArtifactWriter::new(&spec.output_dir) {
                let _ = w.write_json("error.json", &record);
            }
            RunOutcome { exit_code: record.exit_code, manifest: None, error: Some(record) }
        }
    }
}

/// The constant control used by the simulation experiments.
pub fn default_control(cfg: &ModelConfig) -> PiecewiseConstantControl {
    PiecewiseConstantControl::constant(cfg.horizon, cfg.numerics.control_cells, cfg.n_guards, cfg.optimize.initial)
}

struct Outputs {
    status: String,
    noise_floor: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

impl Outputs {
    fn ok(warnings: Vec<String>) -> Self {
        Self { status: "ok".into(), noise_floor: BTreeMap::new(), warnings }
    }
}

fn run_inner(spec: &ExperimentSpec) -> Result<Manifest> {
    let cfg = load_spec_config(spec)?;
    let mut w = ArtifactWriter::new(&spec.output_dir)?;
    let seed = spec.master_seed;
    let out = match spec.kind {
        ExperimentKind::SimulateMicro => simulate_micro(&cfg, seed, &mut w)?,
        ExperimentKind::SimulateAveraged => simulate_averaged(&cfg, seed, &mut w)?,
        ExperimentKind::SimulateMeanfield => simulate_meanfield(&cfg, &mut w)?,
        ExperimentKind::Optimize => optimize(&cfg, seed, &mut w)?,
        ExperimentKind::ConvergeM => run_converge_m(&cfg, seed, &mut w)?,
        ExperimentKind::ConvergeN => run_converge_n(&cfg, &mut w)?,
        ExperimentKind::Validate => run_validate(&cfg, seed, &mut w)?,
    };
    let manifest = Manifest {
        kind: spec.kind,
        status: out.status,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        overrides: spec.overrides.clone(),
        metadata: RunMetadata::new(seed),
        discretization: Discretization::of(&cfg),
        noise_floor: out.noise_floor,
        artifacts: w.records().to_vec(),
        warnings: out.warnings,
    };
    w.write_json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn simulate_micro(cfg: &ModelConfig, seed: u64, w: &mut ArtifactWriter) -> Result<Outputs> {
    let u = default_control(cfg);
    let bundle = micro::simulate(cfg, &u, seed)?;
    w.write_bytes("trajectory.csv", io::bundle_csv(&bundle).as_bytes())?;
    let (data, header) = io::bundle_binary(&bundle);
    w.write_bytes("trajectory.bin", &data)?;
    w.write_json("trajectory.json", &header)?;
    let mut contact = String::from("t,contact_rate\n");
    for s in &bundle.states {
        contact.push_str(&format!("{},{}\n", s.t, micro::contact_rate(s, cfg)));
    }
    w.write_bytes("contact.csv", contact.as_bytes())?;
    Ok(Outputs::ok(bundle.warnings))
}

fn write_grid(w: &mut ArtifactWriter, stem: &str, run: &meanfield::CoupledRun) -> Result<()> {
    let (data, header) = io::grid_binary(&run.times, &run.law);
    w.write_bytes(&format!("{stem}.bin"), &data)?;
    w.write_json(&format!("{stem}.json"), &header)
}

fn simulate_averaged(cfg: &ModelConfig, seed: u64, w: &mut ArtifactWriter) -> Result<Outputs> {
    let u = default_control(cfg);
    let k = cfg.numerics.ensemble;
    let mc = meanfield::simulate_averaged(cfg, &u, k, seed)?;
    let grid = meanfield::simulate_averaged_grid(cfg, &u)?;
    w.write_bytes("commercial_mc.csv", io::series_csv(&mc.times, &mc.commercial).as_bytes())?;
    let paths: Vec<Vec<_>> = (0..mc.times.len()).map(|t| mc.law.slice(t)).collect();
    w.write_bytes("pirate_paths_mc.csv", io::series_csv(&mc.times, &paths).as_bytes())?;
    w.write_bytes("commercial_grid.csv", io::series_csv(&grid.times, &grid.commercial).as_bytes())?;
    w.write_bytes("guards.csv", io::series_csv(&grid.times, &grid.guards).as_bytes())?;
    write_grid(w, "pirate_law_grid", &grid)?;

    let last = mc.times.len() - 1;
    let ensemble = EmpiricalMeasure::new(mc.law.slice(last))?;
    let dual = measure::w1_grid_empirical(grid.final_law(), &ensemble, seed)?;
    let cost_mc = control::cost_averaged(cfg, &u, control::AveragedBackend::Mc { samples: k }, seed)?;
    let cost_grid = control::cost_averaged(cfg, &u, control::AveragedBackend::Grid, seed)?;
    w.write_json(
        "summary.json",
        &serde_json::json!({
            "cost_mc": cost_mc,
            "cost_grid": cost_grid,
            "final_w1_mc_vs_grid": dual,
            "grid_domain": grid.domain,
            "grid_expansions": grid.expansions,
            "max_boundary_mass": grid.max_boundary_mass,
            "max_mass_drift": grid.max_mass_drift,
        }),
    )?;
    let mut out = Outputs::ok(mc.warnings);
    out.warnings.extend(grid.warnings.into_iter().filter(|x| !out.warnings.contains(x)).collect::<Vec<_>>());
    out.noise_floor.insert("grid_sampling_w1".into(), dual.floor);
    out.noise_floor.insert("cost_mc_ci".into(), cost_mc.ci_halfwidth);
    Ok(out)
}

fn simulate_meanfield(cfg: &ModelConfig, w: &mut ArtifactWriter) -> Result<Outputs> {
    let u = default_control(cfg);
    let run = meanfield::simulate_meanfield(cfg, &u, cfg.numerics.particles, GridSpec::from_config(cfg))?;
    w.write_bytes("particles.csv", io::series_csv(&run.times, &run.commercial).as_bytes())?;
    w.write_bytes("guards.csv", io::series_csv(&run.times, &run.guards).as_bytes())?;
    write_grid(w, "pirate_law", &run)?;
    let energy = control::control_energy(&u);
    w.write_json(
        "summary.json",
        &serde_json::json!({
            "cost": energy + run.contact_integral(),
            "control_energy": energy,
            "contact_term": run.contact_integral(),
            "grid_domain": run.domain,
            "grid_expansions": run.expansions,
            "max_boundary_mass": run.max_boundary_mass,
            "max_mass_drift": run.max_mass_drift,
            "min_density": run.min_density,
            "fp_substeps": run.substeps,
        }),
    )?;
    let mut out = Outputs::ok(run.warnings);
    out.noise_floor.insert("max_mass_drift".into(), run.max_mass_drift);
    Ok(out)
}

fn optimize(cfg: &ModelConfig, seed: u64, w: &mut ArtifactWriter) -> Result<Outputs> {
    let cost = CostFunctional::from_config(cfg);
    let u0 = default_control(cfg);
    let f = |u: &PiecewiseConstantControl, s: u64| cost.evaluate(cfg, u, s);
    let opts = OptimizerOptions::from(&cfg.optimize);
    let res = control::optimize(&f, &u0, &cfg.control_set(), &opts, seed, cfg.numerics.execution)?;
    w.write_bytes("history.csv", io::history_csv(&res.history).as_bytes())?;
    w.write_bytes("control.json", io::control_json(&res.control)?.as_bytes())?;
    w.write_json(
        "summary.json",
        &serde_json::json!({
            "cost": cost,
            "outcome": res.outcome,
            "evaluations": res.evaluations,
            "iterations": res.history.len() - 1,
            "final": res.history.last().map(|h| h.report),
        }),
    )?;
    let mut out = Outputs::ok(cfg.warnings());
    if let Some(h) = res.history.last() {
        out.noise_floor.insert("final_ci".into(), h.report.ci_halfwidth);
    }
    Ok(out)
}

fn run_converge_m(cfg: &ModelConfig, seed: u64, w: &mut ArtifactWriter) -> Result<Outputs> {
    let s = &cfg.sweep;
    let u = default_control(cfg);
    let sweep = converge_m(cfg, &u, &s.m_values, s.replications, s.reference_ensemble, s.time_nodes, seed)?;
    w.write_bytes("converge_m.csv", sweep.to_csv().as_bytes())?;
    w.write_json("converge_m.json", &sweep)?;
    let mut out = Outputs::ok(cfg.warnings());
    if let Some(r) = sweep.rows.first() {
        out.noise_floor.insert("w1_reference_halves".into(), r.w1_floor);
    }
    out.noise_floor.insert("reference_cost_ci".into(), sweep.reference_cost.ci_halfwidth);
    Ok(out)
}

fn run_converge_n(cfg: &ModelConfig, w: &mut ArtifactWriter) -> Result<Outputs> {
    let s = &cfg.sweep;
    let u = default_control(cfg);
    let sweep = converge_n(cfg, &u, &s.n_values, s.reference_particles, s.time_nodes)?;
    w.write_bytes("converge_n.csv", sweep.to_csv().as_bytes())?;
    w.write_json("converge_n.json", &sweep)?;
    let mut out = Outputs::ok(cfg.warnings());
    if let Some(r) = sweep.rows.first() {
        out.noise_floor.insert("w1_particle_halving".into(), r.w1_floor);
        out.noise_floor.insert("cost_particle_halving".into(), r.cost_floor);
    }
    Ok(out)
}

fn run_validate(cfg: &ModelConfig, seed: u64, w: &mut ArtifactWriter) -> Result<Outputs> {
    let checks = validate_suite(cfg, seed)?;
    w.write_json("validate.json", &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let mut out = Outputs::ok(cfg.warnings());
    if !failed.is_empty() {
        out.status = format!("failed: {}", failed.join(", "));
    }
    Ok(out)
}

/// Hash of every artifact in a manifest, for rerun comparisons.
pub fn artifact_digest(manifest: &Manifest) -> String {
    let joined: String = manifest
        .artifacts
        .iter()
        .map(|a| format!("{} {}\n", a.path, a.sha256))
        .collect();
    io::sha256_hex(joined.as_bytes())
}

/// Reads `manifest.json` from an output directory.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}
