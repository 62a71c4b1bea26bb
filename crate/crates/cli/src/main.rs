//! Pipeline driver: orchestrates the analysis stages behind one binary with
//! a declarative TOML configuration.
//!
//! Exit codes: 0 success, 1 usage/configuration error (including missing
//! prior-stage outputs), 2 data validation error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use annostat_cli::config::{RunConfig, ScenarioKind};
use annostat_cli::{stages, CliError};

#[derive(Parser)]
#[command(
    name = "annostat",
    version,
    about = "Disaggregated annotation analysis pipeline",
    subcommand_required = true
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for stage artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Scenario override: full | annotator-split | batch-subsets.
    #[arg(long, global = true)]
    scenario: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Parse and cross-check every configured input.
    Validate,
    /// Clean, harmonize, filter, and split the dataset.
    Preprocess,
    /// Extract, token-normalize, and standardize the linguistic features.
    Features,
    /// Correlation filtering and clustering; apply picks when configured.
    Select,
    /// Build the fixed-effect design and group indices per scenario label.
    Design,
    /// Sample the posterior (resumable per chain).
    Fit,
    /// Effect summaries and survivor flags.
    Summarize,
    /// Interaction prediction grids.
    Predict,
    /// Human-readable report plus plot-data files.
    Report,
    /// Synthetic-data recovery and calibration checks.
    Simcheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Preprocess => "preprocess",
            Command::Features => "features",
            Command::Select => "select",
            Command::Design => "design",
            Command::Fit => "fit",
            Command::Summarize => "summarize",
            Command::Predict => "predict",
            Command::Report => "report",
            Command::Simcheck => "simcheck",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let out = cli
        .out
        .ok_or_else(|| CliError::Usage("--out <dir> is required".into()))?;
    let config = RunConfig::load(&config_path)?;
    let seed = cli
        .seed
        .or(config.seed)
        .ok_or_else(|| CliError::Usage("a seed is mandatory: set `seed` in the config or pass --seed".into()))?;
    let scenario = match cli.scenario.as_deref() {
        None => config.scenario.kind,
        Some("full") => ScenarioKind::Full,
        Some("annotator-split") => ScenarioKind::AnnotatorSplit,
        Some("batch-subsets") => ScenarioKind::BatchSubsets,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown scenario `{other}` (full | annotator-split | batch-subsets)"
            )))
        }
    };
    if let Some(jobs) = cli.jobs {
        // Ignore the error when a pool already exists (tests share a process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    let ctx = stages::Ctx::new(config, seed, out, scenario)?;
    let stage = cli.command.name();
    let started = std::time::Instant::now();
    let result = match cli.command {
        Command::Validate => ctx.validate(),
        Command::Preprocess => ctx.preprocess(),
        Command::Features => ctx.features(),
        Command::Select => ctx.select(),
        Command::Design => ctx.design(),
        Command::Fit => ctx.fit(),
        Command::Summarize => ctx.summarize(),
        Command::Predict => ctx.predict(),
        Command::Report => ctx.report(),
        Command::Simcheck => ctx.simcheck(),
    };
    if result.is_ok() {
        ctx.log_run(stage, started.elapsed());
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("data error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}
