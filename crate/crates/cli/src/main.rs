use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use corsair::harness::{self, ExperimentKind, ExperimentSpec};

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    SimulateMicro,
    SimulateAveraged,
    SimulateMeanfield,
    Optimize,
    ConvergeM,
    ConvergeN,
    Validate,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::SimulateMicro => ExperimentKind::SimulateMicro,
            Kind::SimulateAveraged => ExperimentKind::SimulateAveraged,
            Kind::SimulateMeanfield => ExperimentKind::SimulateMeanfield,
            Kind::Optimize => ExperimentKind::Optimize,
            Kind::ConvergeM => ExperimentKind::ConvergeM,
            Kind::ConvergeN => ExperimentKind::ConvergeN,
            Kind::Validate => ExperimentKind::Validate,
        }
    }
}

/// Simulation, convergence and control experiments for the commercial /
/// pirate / coast-guard model.
#[derive(Debug, Parser)]
#[command(name = "corsair", version)]
struct Cli {
    kind: Kind,
    /// JSON model configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Dotted-key override, e.g. `--set numerics.steps=256`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    overrides: Vec<(String, String)>,
    /// Maximum worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    if k.is_empty() {
        return Err("override key is empty".into());
    }
    Ok((k.to_string(), v.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if !corsair::par::set_threads(t) {
            log::warn!("--threads {t} ignored: no worker pool available");
        }
    }
    let spec = ExperimentSpec {
        kind: cli.kind.into(),
        config_path: Some(cli.config),
        overrides: cli.overrides,
        output_dir: cli.out,
        master_seed: cli.seed,
    };
    let outcome = harness::run(&spec);
    match (&outcome.manifest, &outcome.error) {
        (Some(m), _) => {
            for w in &m.warnings {
                log::warn!("{w}");
            }
            println!("{} {} ({} artifacts)", m.kind.name(), m.status, m.artifacts.len());
        }
        (None, Some(e)) => {
            eprintln!("error: {}", e.message);
            match serde_json::to_string(e) {
                Ok(json) => eprintln!("{json}"),
                Err(err) => log::error!("could not encode error record: {err}"),
            }
        }
        (None, None) => {}
    }
    ExitCode::from(outcome.exit_code as u8)
}
