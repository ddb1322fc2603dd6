//! `anticoncentration-lab`: runs one configured experiment and writes its
//! CSV/JSON artifacts plus a manifest of content hashes.

mod config;
mod error;
mod experiments;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, ExperimentName};
use error::{LabError, EXIT_CONFIG};
use manifest::{now, Outputs, RunManifest, MANIFEST_SCHEMA};

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "ANTICONCENTRATION_WORKERS";

#[derive(Parser)]
#[command(name = "anticoncentration-lab", version, about = "Desk-scale anticoncentration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output directory; default is the config's `output_dir`, else `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Checks a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    HaarIpr(RunArgs),
    Rmps(RunArgs),
    Rpm(RunArgs),
    Simulate(RunArgs),
    Rtn(RunArgs),
    Fit(RunArgs),
    Collapse(RunArgs),
    Xeb(RunArgs),
    Distribution(RunArgs),
}

fn load_checked(path: &std::path::Path) -> Result<ExperimentConfig, LabError> {
    let config = ExperimentConfig::load(path).map_err(|d| LabError::Config(vec![d]))?;
    let diags = config.check();
    if diags.is_empty() {
        Ok(config)
    } else {
        Err(LabError::Config(diags))
    }
}

fn run(name: ExperimentName, args: RunArgs) -> Result<RunManifest, LabError> {
    let mut config = load_checked(&args.config)?;
    if config.experiment != name {
        return Err(LabError::Config(vec![config::Diagnostic {
            location: "experiment".into(),
            message: format!("config describes `{}` but `{name}` was requested", config.experiment),
            capacity: false,
        }]));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let workers = args
        .workers
        .or(config.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(LabError::Config(vec![config::Diagnostic {
            location: "--workers".into(),
            message: "worker count must be positive".into(),
            capacity: false,
        }]));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Core(anticoncentration::Error::Numerical { message: e.to_string(), diagnostic: None }))?;
    let dir = args
        .out
        .or_else(|| config.output_dir.as_ref().map(|d| config.resolve(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let started_at = now();
    let mut outputs = Outputs::create(&dir)?;
    pool.install(|| experiments::run(&config, &mut outputs))?;
    outputs.finish(RunManifest {
        schema: MANIFEST_SCHEMA,
        experiment: name.to_string(),
        config_digest: config.digest(),
        seed: config.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        workers,
        started_at,
        finished_at: String::new(),
        outputs: Vec::new(),
    })
}

fn report(e: &LabError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let (name, args) = match cli.command {
        Command::Validate { config } => {
            return match load_checked(&config) {
                Ok(c) => {
                    println!("{}: valid {} config", config.display(), c.experiment);
                    ExitCode::SUCCESS
                }
                Err(e) => report(&e),
            };
        }
        Command::HaarIpr(a) => (ExperimentName::HaarIpr, a),
        Command::Rmps(a) => (ExperimentName::Rmps, a),
        Command::Rpm(a) => (ExperimentName::Rpm, a),
        Command::Simulate(a) => (ExperimentName::Simulate, a),
        Command::Rtn(a) => (ExperimentName::Rtn, a),
        Command::Fit(a) => (ExperimentName::Fit, a),
        Command::Collapse(a) => (ExperimentName::Collapse, a),
        Command::Xeb(a) => (ExperimentName::Xeb, a),
        Command::Distribution(a) => (ExperimentName::Distribution, a),
    };
    match run(name, args) {
        Ok(m) => {
            for f in &m.outputs {
                println!("{}  {}", f.sha256, f.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
