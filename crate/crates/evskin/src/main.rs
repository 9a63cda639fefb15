use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use evskin::commands::{self, AblateArgs, AppError, CommandOutcome, Common, LatencyArgs, Preset};
use evskin::ingest::EventFormat;

/// Stereo event-camera touch localization on an elastomer skin.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Run configuration (JSON). For `simulate`, a synthesis spec.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording with ground truth.
    Simulate {
        #[arg(long, value_enum, default_value_t = EventFormat::Csv)]
        format: EventFormat,
        /// Built-in settings, ignored when --config is given.
        #[arg(long, value_enum, default_value_t = Preset::Ideal)]
        preset: Preset,
    },
    /// Localize every scheduled press and report the error metrics.
    Localize {
        /// Camera models overriding the config.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Fit camera models on the training repetition.
    Calibrate,
    /// Sweep event-thinning factors.
    Ablate {
        /// Comma-separated reduction factors, e.g. 1,4,16.
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<u32>>,
        /// Comma-separated thinning seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Judge each factor against its own p95 error.
        #[arg(long)]
        per_k_reference: bool,
        /// Camera models overriding the config.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Press-onset detection latency.
    Latency {
        /// Fixed CUSUM threshold; skips tuning.
        #[arg(long, conflicts_with = "tune")]
        h: Option<f64>,
        /// Tune the threshold even if the config disables it.
        #[arg(long)]
        tune: bool,
    },
}

fn dispatch(cli: &Cli, common: &Common) -> Result<CommandOutcome, AppError> {
    match &cli.command {
        Command::Simulate { format, preset } => commands::simulate(common, *format, *preset),
        Command::Localize { models } => commands::localize(common, models.as_deref()),
        Command::Calibrate => commands::calibrate_cmd(common),
        Command::Ablate { factors, seeds, per_k_reference, models } => commands::ablate(
            common,
            &AblateArgs {
                factors: factors.clone(),
                seeds: seeds.clone(),
                per_k_reference: *per_k_reference,
                models: models.as_deref(),
            },
        ),
        Command::Latency { h, tune } => commands::latency(common, &LatencyArgs { h: *h, tune: *tune }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).init();
    let common = Common { config: cli.config.clone(), out: cli.out.clone(), seed: cli.seed };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(&cli, &common)) {
        Ok(outcome) => {
            for p in &outcome.reports {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
