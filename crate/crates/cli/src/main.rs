//! `massive`: sample masses, simulate massive particle systems, compare
//! measures and run the statistical verification suites.
//!
//! Exit codes: 0 success, 1 a required test failed, 2 usage or
//! configuration error, 3 any other failure.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, MetricName, Suite, UsageError};
use manifest::Run;

#[derive(Parser)]
#[command(name = "massive", version, about = "Massive particle systems: simulation and verification")]
struct Cli {
    /// TOML configuration, or a run manifest to repeat.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "MASSIVE_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw mass sequences from the configured law.
    SampleMasses {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Simulate trajectories and write them as CSV with JSON sidecars.
    Simulate {
        /// Overrides simulate.n_paths.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Pairwise distances between measures.
    Metrics {
        /// Use the frames of this trajectory CSV (sidecar alongside).
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Overrides metrics.metrics.
        #[arg(long, value_delimiter = ',')]
        metric: Vec<MetricName>,
        /// Measure CSV files (`mass,x0,...`).
        inputs: Vec<PathBuf>,
    },
    /// Run a verification suite; fails when any test fails.
    Verify {
        /// Overrides verify.suite.
        #[arg(long, value_enum)]
        suite: Option<Suite>,
        /// Overrides verify.n_paths.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Summarise a run directory.
    Report { dir: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SampleMasses { .. } => "sample-masses",
            Command::Simulate { .. } => "simulate",
            Command::Metrics { .. } => "metrics",
            Command::Verify { .. } => "verify",
            Command::Report { .. } => "report",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<commands::Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Simulate { paths: Some(n) } => cfg.simulate.n_paths = *n,
        Command::Metrics { metric, .. } if !metric.is_empty() => cfg.metrics.metrics = metric.clone(),
        Command::Verify { suite, paths } => {
            if let Some(s) = suite {
                cfg.verify.suite = *s;
            }
            if let Some(n) = paths {
                cfg.verify.n_paths = *n;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!(UsageError("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let name = cli.command.name();
    let out = cli.out.clone();
    let start = |default: &str| {
        let dir = out.clone().unwrap_or_else(|| PathBuf::from("massive-out").join(default));
        Run::start(name, &dir, &cfg, cli.threads)
    };
    match &cli.command {
        Command::SampleMasses { count } => commands::sample_masses(&cfg, start(name)?, *count),
        Command::Simulate { .. } => commands::simulate(&cfg, start(name)?),
        Command::Metrics { trajectory, inputs, .. } => {
            commands::metrics(&cfg, start(name)?, trajectory.as_deref(), inputs)
        }
        Command::Verify { .. } => commands::verify(&cfg, start(name)?, cfg.verify.suite),
        Command::Report { dir } => {
            let run = if out.is_some() { Some(start(name)?) } else { None };
            commands::report(dir, run)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) if o.failed => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
