//! Command-line driver: corpus generation, feature extraction, compilation,
//! training, prediction, benchmarking, simulation and validation.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant breach.

use std::path::PathBuf;

use atomlayout::pipeline::PipelineError;
use atomlayout::predictor::Metric;
use atomlayout::scheduler::GateDurations;
use atomlayout::topology::LatticeKind;
use atomlayout::RadiusConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod io;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Invariant(m) => CliError::Invariant(m),
            PipelineError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "atomlayout", version, about = "Topology selection and compilation for neutral-atom circuits")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// RunConfig JSON to start from; explicit flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// square, s-triangle or t-triangle.
    #[arg(long, global = true, value_parser = config::parse_topology)]
    pub topology: Option<LatticeKind>,
    /// Interaction and blockade radii as `r2,r3,rb`.
    #[arg(long, global = true, value_parser = config::parse_radii)]
    pub radii: Option<RadiusConfig>,
    /// Pulse counts as `one,two,three,swap`.
    #[arg(long, global = true, value_parser = config::parse_durations)]
    pub durations: Option<GateDurations>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Critical,
    Total,
    Fidelity,
    All,
}

impl MetricArg {
    pub fn single(self) -> Result<Metric, CliError> {
        match self {
            MetricArg::Critical => Ok(Metric::Critical),
            MetricArg::Total => Ok(Metric::Total),
            MetricArg::Fidelity => Ok(Metric::Fidelity),
            MetricArg::All => Err(CliError::Usage("this command takes a single metric".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// One-qubit depolarizing probability.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random circuit corpus with a manifest.
    Gen {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        width_min: Option<usize>,
        #[arg(long)]
        width_max: Option<usize>,
        #[arg(long)]
        instructions_min: Option<usize>,
        #[arg(long)]
        instructions_max: Option<usize>,
    },
    /// Compute the 14 static features of circuits (files or directories).
    Features {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// CSV destination; JSON on stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map, route and schedule one circuit.
    Compile {
        circuit: PathBuf,
        /// Compile on all three topologies.
        #[arg(long)]
        all: bool,
        /// Write routed circuits and schedules as JSON.
        #[arg(long)]
        schedule_out: Option<PathBuf>,
    },
    /// Label a corpus on all topologies and train the model bank.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "critical")]
        metric: MetricArg,
        #[arg(long)]
        out: PathBuf,
        /// Cross-validation report; defaults to `<out>.cv.csv`.
        #[arg(long)]
        cv_out: Option<PathBuf>,
        /// Features and labels used for training.
        #[arg(long)]
        dataset_out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Cross-validation folds (0 disables).
        #[arg(long)]
        folds: Option<usize>,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Predict each topology's metric and pick the best.
    Predict {
        #[arg(long)]
        bank: PathBuf,
        circuit: PathBuf,
        #[arg(long, value_enum, default_value = "critical")]
        metric: MetricArg,
    },
    /// Compare oracle, worst, fixed, random and predicted topologies.
    Bench {
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "critical")]
        metric: MetricArg,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Sample a circuit under depolarizing noise.
    Simulate {
        circuit: PathBuf,
        /// Simulate the routed circuit on `--topology` (SWAPs add noise).
        #[arg(long)]
        routed: bool,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Compile circuits and check routing and schedule invariants.
    Validate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen { .. } => "gen",
            Command::Features { .. } => "features",
            Command::Compile { .. } => "compile",
            Command::Train { .. } => "train",
            Command::Predict { .. } => "predict",
            Command::Bench { .. } => "bench",
            Command::Simulate { .. } => "simulate",
            Command::Validate { .. } => "validate",
        }
    }
}

/// Builds the run configuration from defaults, `--config` and flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.command = cli.command.name().to_string();
    cfg.inputs.clear();
    cfg.outputs.clear();
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(j) = g.jobs {
        cfg.jobs = j;
    }
    if g.topology.is_some() {
        cfg.topology = g.topology;
    }
    if g.radii.is_some() {
        cfg.radii = g.radii;
    }
    if let Some(d) = g.durations {
        cfg.durations = d;
    }
    let noise = match &cli.command {
        Command::Train { noise, .. } | Command::Bench { noise, .. } | Command::Simulate { noise, .. } => Some(noise),
        _ => None,
    };
    if let Some(n) = noise {
        if let Some(p) = n.noise {
            cfg.noise.p1 = p;
        }
        if let Some(s) = n.shots {
            cfg.shots = s;
        }
    }
    match &cli.command {
        Command::Gen {
            width_min,
            width_max,
            instructions_min,
            instructions_max,
            ..
        } => {
            let c = &mut cfg.corpus;
            c.width.0 = width_min.unwrap_or(c.width.0);
            c.width.1 = width_max.unwrap_or(c.width.1);
            c.instructions.0 = instructions_min.unwrap_or(c.instructions.0);
            c.instructions.1 = instructions_max.unwrap_or(c.instructions.1);
        }
        Command::Train { epochs, folds, .. } => {
            if let Some(e) = epochs {
                cfg.adam.epochs = *e;
            }
            if let Some(f) = folds {
                cfg.folds = *f;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed command on a thread pool of `jobs` workers.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| commands::dispatch(cli.command, cfg))
}
