use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use promo_gym::{
    cmd_build, cmd_eval, cmd_export_metrics, cmd_ingest, cmd_render, cmd_train, CliError, Overrides,
};

#[derive(Parser, Debug)]
#[command(
    name = "promo-gym",
    version,
    about = "Promotional forecasting with tabular Q-learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run manifest (JSON).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Overrides the learner seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Training episodes (train) or evaluation episodes (eval).
    #[arg(long, global = true)]
    episodes: Option<usize>,

    /// Slippery Frozen-Lake.
    #[arg(long, global = true)]
    slippery: Option<bool>,

    /// Build a promotion-free grid when the target week has no promotions.
    #[arg(long, global = true)]
    allow_empty_promos: bool,

    /// Trace file to render (default: <out>/traces/greedy.csv).
    #[arg(long, global = true)]
    trace: Option<PathBuf>,

    /// Transition-table file (default: <out>/table.json).
    #[arg(long, global = true)]
    table: Option<PathBuf>,

    /// Q-table file to evaluate (default: <out>/qtable.json).
    #[arg(long, global = true)]
    qtable: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Parse input CSVs into the unified series and binning model.
    Ingest,
    /// Build and validate the environment's transition table.
    Build,
    /// Train a Q-table and write reward curves.
    Train,
    /// Evaluate a stored Q-table greedily.
    Eval,
    /// Render a trace file as text.
    Render,
    /// Recompute reward curves from stored training traces.
    ExportMetrics,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let path = cli
        .manifest
        .as_ref()
        .ok_or_else(|| CliError::input("--manifest <path> is required"))?;
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        episodes: cli.episodes,
        slippery: cli.slippery,
        allow_empty_promos: cli.allow_empty_promos,
        trace: cli.trace.clone(),
        table: cli.table.clone(),
        qtable: cli.qtable.clone(),
    };
    let manifest = promo_gym::load_manifest(path, &overrides)?;
    match cli.command {
        Command::Ingest => cmd_ingest(&manifest),
        Command::Build => cmd_build(&manifest),
        Command::Train => cmd_train(&manifest, &overrides),
        Command::Eval => cmd_eval(&manifest, &overrides),
        Command::Render => cmd_render(&manifest, &overrides),
        Command::ExportMetrics => cmd_export_metrics(&manifest),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("promo-gym: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
