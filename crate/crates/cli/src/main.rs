//! Command-line front end: end-to-end analysis runs, single-metric
//! computation, stratified sampling, the correlation/timing studies, and
//! instance-space plots.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub(crate) const EXIT_DATA: u8 = 2;
pub(crate) const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "adequacy",
    version,
    about = "Black-box test-suite adequacy metrics over a 2D instance space"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for generated artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Format for stdout summaries.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Config keys that may be overridden from the command line; precedence is
/// CLI flag > config file > built-in default.
#[derive(Args, Default, Clone)]
pub struct ConfigOverrides {
    /// Candidate cluster counts, comma separated (default 2..=min(10, m-1)).
    #[arg(long, value_delimiter = ',')]
    pub k_candidates: Option<Vec<usize>>,
    #[arg(long)]
    pub rf_trees: Option<usize>,
    #[arg(long)]
    pub cv_folds: Option<usize>,
    #[arg(long)]
    pub combo_cap: Option<usize>,
    #[arg(long)]
    pub pilot_restarts: Option<usize>,
    #[arg(long)]
    pub shannon_bins: Option<usize>,
    /// Epsilon rule: paper | dimension-root.
    #[arg(long)]
    pub eps_formula: Option<String>,
    #[arg(long)]
    pub boundary_corr_threshold: Option<f64>,
    #[arg(long)]
    pub ncd_exact_limit: Option<usize>,
    /// Allow timing-study sizes beyond the suite via resampling.
    #[arg(long)]
    pub augment: bool,
}

#[derive(Args, Clone)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 2500)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 30)]
    pub n_samples: usize,
    /// Bug-fraction sweep start, percent.
    #[arg(long, default_value_t = 5.0)]
    pub bug_start: f64,
    /// Bug-fraction sweep stop, percent.
    #[arg(long, default_value_t = 75.0)]
    pub bug_stop: f64,
    /// Bug-fraction sweep step, percent.
    #[arg(long, default_value_t = 5.0)]
    pub bug_step: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Question {
    Rq1,
    Rq2,
    Rq3,
}

#[derive(Subcommand)]
pub enum Command {
    /// Full analysis: feature selection, instance space, all metrics,
    /// report and plots.
    Analyze {
        suite: PathBuf,
        #[arg(long, default_value = "outcome")]
        outcome_column: String,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Compute selected metrics only.
    Metrics {
        suite: PathBuf,
        /// Comma-separated metric names
        /// (shannon, euclidean, ncd, std, area_is, area_bugs, cov_is, tisa).
        #[arg(long, value_delimiter = ',', required = true)]
        metric: Vec<String>,
        #[arg(long, default_value = "outcome")]
        outcome_column: String,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Draw stratified samples and write them as CSV suites.
    Sample {
        suite: PathBuf,
        #[arg(long, default_value = "outcome")]
        outcome_column: String,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Run the correlation (rq1/rq2) or timing (rq3) study.
    Experiment {
        suite: PathBuf,
        #[arg(long, value_enum)]
        question: Question,
        #[arg(long, default_value = "outcome")]
        outcome_column: String,
        #[command(flatten)]
        plan: PlanArgs,
        /// Metrics to include (default: shannon,euclidean,std,tisa; ncd is
        /// opt-in because the greedy subset descent is quadratic in
        /// compressions per level).
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        /// Sample sizes for rq3.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Per-cell timeout in seconds for rq3.
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Timing study over sample sizes (shortcut for experiment --question rq3).
    Bench {
        suite: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        metrics: Option<Vec<String>>,
        #[arg(long, default_value = "outcome")]
        outcome_column: String,
        /// Per-cell timeout in seconds.
        #[arg(long, default_value_t = 600)]
        timeout: u64,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Render one instance-space plot from a saved projection model.
    Plot {
        suite: PathBuf,
        /// Projection model JSON written by analyze.
        #[arg(long)]
        model: PathBuf,
        /// outcome, or feature:<name>.
        #[arg(long, default_value = "outcome")]
        color: String,
        /// Feature columns the model was fit on, comma separated; defaults
        /// to all suite features.
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<String>>,
        /// Boundary hull JSON to overlay.
        #[arg(long)]
        hull: Option<PathBuf>,
        #[arg(long, default_value = "outcome")]
        outcome_column: String,
        /// Output file; defaults to <out-dir>/plot.svg.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub(crate) enum AppError {
    Usage(String),
    Stage { stage: &'static str, message: String },
}

impl From<adequacy::PipelineError> for AppError {
    fn from(err: adequacy::PipelineError) -> Self {
        AppError::Stage {
            stage: err.stage(),
            message: err.to_string(),
        }
    }
}

impl From<adequacy::DatasetError> for AppError {
    fn from(err: adequacy::DatasetError) -> Self {
        AppError::Stage {
            stage: "dataset",
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(err: std::io::Error) -> Self {
        AppError::Stage {
            stage: "io",
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(AppError::Stage { stage, message }) => {
            eprintln!("error [stage:{stage}]: {message}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
