//! `scotsim`: build topologies, run experiments and sweeps, emit fixtures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scotsim::config::ExperimentConfig;
use scotsim::error::ConfigError;
use scotsim::experiment::{run_experiment, ExperimentError};
use scotsim::fixtures::{fixture, FIXTURE_NAMES};
use scotsim::routing::RoutingMode;
use scotsim::sweep::{grid, run_sweep, ScenarioKind};
use scotsim::topology::TopologySpec;

const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "scotsim", version, about = "Clustered content-based routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and validate a topology and print its counts.
    Topology {
        #[command(flatten)]
        source: Source,
        /// Also list every broker and link.
        #[arg(long)]
        dump: bool,
    },
    /// Run one experiment and write its CSV artifacts.
    Run {
        #[command(flatten)]
        source: Source,
        /// Overrides the configured primary mode.
        #[arg(long)]
        mode: Option<RoutingMode>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (falls back to SCOTSIM_OUT, then the config's `out`).
        #[arg(long, env = "SCOTSIM_OUT")]
        out: Option<PathBuf>,
        /// Record a per-event trace of the primary mode in trace.txt.
        #[arg(long)]
        trace: bool,
    },
    /// Run a scenario over its parameter grid, one directory per point.
    Sweep {
        #[arg(long)]
        scenario: ScenarioKind,
        /// Divides client counts and volumes; 1 gives the published sizes.
        #[arg(long, default_value_t = 100)]
        divisor: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of grid points run concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, env = "SCOTSIM_OUT", default_value = "scotsim-out")]
        out: PathBuf,
    },
    /// Print a built-in configuration as JSON, or list the names.
    Fixtures {
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment config file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in fixture name.
    #[arg(long)]
    fixture: Option<String>,
}

fn unknown_fixture(name: &str) -> ConfigError {
    ConfigError::Invalid {
        path: "--fixture".into(),
        message: format!("unknown fixture `{name}` (known: {})", FIXTURE_NAMES.join(", ")),
    }
}

fn load_config(source: &Source) -> Result<ExperimentConfig, ConfigError> {
    match (&source.config, &source.fixture) {
        (Some(path), _) => ExperimentConfig::load(path),
        (None, Some(name)) => fixture(name).ok_or_else(|| unknown_fixture(name)),
        (None, None) => unreachable!("clap requires one source"),
    }
}

/// A topology file may be a full experiment config or a bare topology spec.
fn load_topology(source: &Source) -> Result<TopologySpec, ConfigError> {
    if let Some(path) = &source.config {
        let text = std::fs::read_to_string(path)?;
        if let Ok(spec) = serde_json::from_str::<TopologySpec>(&text) {
            return Ok(spec);
        }
        return ExperimentConfig::from_json(&text, &path.display().to_string()).map(|c| c.topology);
    }
    load_config(source).map(|c| c.topology)
}

fn topology(source: &Source, dump: bool) -> Result<(), ExperimentError> {
    let topo = load_topology(source)?.build().map_err(ConfigError::from)?;
    if dump {
        print!("{}", topo.dump());
    } else {
        println!("{}", topo.summary());
    }
    Ok(())
}

fn run(
    source: &Source,
    mode: Option<RoutingMode>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    trace: bool,
) -> Result<(), ExperimentError> {
    let mut cfg = load_config(source)?;
    if let Some(mode) = mode {
        cfg.compare.retain(|m| *m != mode);
        if cfg.mode != mode {
            cfg.compare.insert(0, cfg.mode);
            cfg.mode = mode;
        }
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let out = out.or_else(|| cfg.out.clone());
    let result = run_experiment(&cfg, out.as_deref(), trace)?;
    print!("{}", result.summary);
    if let Some(dir) = out {
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

fn sweep(kind: ScenarioKind, divisor: usize, seed: u64, parallel: usize, out: &Path) -> u8 {
    let points = grid(kind, divisor, seed);
    let mut status = 0;
    for outcome in run_sweep(&points, kind, out, parallel.max(1)) {
        match outcome.result {
            Ok(_) => println!("{} ok {}", outcome.label, outcome.dir.display()),
            Err(e) => {
                println!("{} failed {}", outcome.label, outcome.dir.display());
                eprintln!("error: {}: {e}", outcome.label);
                status = status.max(e.exit_code() as u8);
            }
        }
    }
    status
}

fn fixtures(name: Option<&str>) -> Result<(), ExperimentError> {
    match name {
        None => FIXTURE_NAMES.iter().for_each(|n| println!("{n}")),
        Some(n) => println!("{}", fixture(n).ok_or_else(|| unknown_fixture(n))?.to_json()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Topology { source, dump } => topology(&source, dump),
        Command::Run {
            source,
            mode,
            seed,
            out,
            trace,
        } => run(&source, mode, seed, out, trace),
        Command::Sweep {
            scenario,
            divisor,
            seed,
            parallel,
            out,
        } => {
            if divisor == 0 {
                eprintln!("error: --divisor must be at least 1");
                return ExitCode::from(EXIT_CONFIG);
            }
            return ExitCode::from(sweep(scenario, divisor, seed, parallel, &out));
        }
        Command::Fixtures { name } => fixtures(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
