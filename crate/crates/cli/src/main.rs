mod artifacts;
mod pipeline;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use flightdelay::eval::FeatureCombo;
use flightdelay::learn::ModelKind;
use tracing_subscriber::EnvFilter;

/// Departure-delay prediction from airport surface trajectories.
///
/// Stages talk to each other through files in the `--out` directory:
/// synth → ingest → featurize → train/eval/sweep/importance.
#[derive(Debug, Parser)]
#[command(name = "flightdelay", version)]
struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output; repeat for debug level.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Working directory for inputs and outputs.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Stage-specific JSON config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct WindowArgs {
    /// Observation window length in minutes.
    #[arg(long)]
    window_min: Option<i64>,
    /// Prediction gap before scheduled gate-out, in minutes.
    #[arg(long)]
    gap_min: Option<i64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic airport scenario (schedule, GPS, weather, ground truth).
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Clean and segment GPS tracks.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// Directory holding gps.csv, schedule.csv and weather.csv (defaults to --out).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Zone map JSON (defaults to zones.json in the input directory, then the bundled map).
        #[arg(long)]
        zones: Option<PathBuf>,
    },
    /// Build the per-flight feature table and trajectory images.
    Featurize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Train one model on the temporal training split and save it.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "gbdt")]
        model: ModelKind,
        #[arg(long, default_value = "ref+w+atc")]
        features: FeatureCombo,
    },
    /// Compare models and feature sets on a temporal holdout.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Models to compare (comma-separated).
        #[arg(long, value_delimiter = ',', default_value = "lr,mlp,gbdt,trajcnn")]
        model: Vec<ModelKind>,
        /// Feature combinations to compare (comma-separated).
        #[arg(long, value_delimiter = ',', default_value = "ref,ref+w,ref+atc,ref+w+atc,ref+img,ref+w+img")]
        features: Vec<FeatureCombo>,
        /// Also run k-fold temporal cross-validation with this many folds.
        #[arg(long)]
        cv: Option<usize>,
        /// Emit plot_data.csv in long format.
        #[arg(long)]
        plot_data: bool,
    },
    /// Re-extract features over a grid of observation lengths and gaps.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Observation lengths in minutes (comma-separated).
        #[arg(long, default_value = "30,60,120")]
        lengths: String,
        /// Prediction gaps in minutes (comma-separated).
        #[arg(long, default_value = "60,120,240")]
        gaps: String,
        #[arg(long, default_value = "gbdt")]
        model: ModelKind,
        #[arg(long, default_value = "ref+w+atc")]
        features: FeatureCombo,
        #[arg(long)]
        plot_data: bool,
    },
    /// Rank features of a saved GBDT model by split count.
    Importance {
        #[command(flatten)]
        common: Common,
        /// Model file (defaults to models/gbdt_<features>.json).
        #[arg(long)]
        model_file: Option<PathBuf>,
        #[arg(long, default_value = "ref+w+atc")]
        features: FeatureCombo,
    },
    /// Delay statistics and per-attribute explainability of the schedule.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "LAX")]
        airport: String,
    },
    /// Run every stage from one pipeline.json.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Synth { common } => stages::synth(&common.out, common.config.as_deref(), common.seed).map(drop),
        Command::Ingest { common, input, zones } => {
            let input = input.unwrap_or_else(|| common.out.clone());
            stages::ingest(&input, &common.out, zones.as_deref(), common.config.as_deref())
        }
        Command::Featurize { common, window } => {
            stages::featurize(&common.out, common.config.as_deref(), window.window_min, window.gap_min).map(drop)
        }
        Command::Train { common, model, features } => {
            stages::train(&common.out, common.config.as_deref(), common.seed, model, features)
        }
        Command::Eval {
            common,
            model,
            features,
            cv,
            plot_data,
        } => {
            let opts = stages::EvalOptions {
                models: model,
                combos: features,
                cv,
                plot_data,
                test_fraction: stages::DEFAULT_TEST_FRACTION,
            };
            let config = stages::load_eval_config(common.config.as_deref(), common.seed)?;
            stages::eval(&common.out, &config, &opts)
        }
        Command::Sweep {
            common,
            lengths,
            gaps,
            model,
            features,
            plot_data,
        } => {
            let config = stages::load_eval_config(common.config.as_deref(), common.seed)?;
            let spec = stages::SweepOptions {
                lengths: flightdelay::eval::parse_minutes(&lengths)?,
                gaps: flightdelay::eval::parse_minutes(&gaps)?,
                model,
                features,
                plot_data,
            };
            stages::sweep(&common.out, &config, &spec)
        }
        Command::Importance {
            common,
            model_file,
            features,
        } => stages::importance(&common.out, model_file.as_deref(), features),
        Command::Analyze { common, airport } => stages::analyze(&common.out, &airport),
        Command::Pipeline { common } => {
            let path = common
                .config
                .as_deref()
                .unwrap_or_else(|| std::path::Path::new("pipeline.json"));
            pipeline::run(path, &common.out, common.seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
