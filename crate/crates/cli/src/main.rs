//! `gsnna`: run greedy layer-wise architecture searches from the command line.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 invalid arguments, 3 invalid
//! configuration, 4 data or model schema error, 5 every trial of an iteration failed.

mod config;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gsnna_core::search::SearchKind;
use gsnna_core::space::Family;

use config::RunConfig;
use run::CliError;

#[derive(Parser)]
#[command(name = "gsnna", version, about = "Greedy layer-wise neural architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Eggbox regression surface as CSV (columns x,y,f).
    GenEggbox {
        #[arg(long, default_value_t = gsnna_core::data::EGGBOX_DEFAULT_COUNT)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample a regular lattice instead of uniform random points.
        #[arg(long)]
        grid: bool,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run a search; flags override values from the configuration file.
    Search(SearchArgs),
    /// Score a saved model on a CSV file with the same columns as its training data.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Print the scores as a JSON object.
        #[arg(long)]
        json: bool,
    },
    /// Emit the best-score-per-depth table of a report as CSV.
    SweepReport {
        #[arg(long)]
        report: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Gsnna,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Mlp,
    Cnn,
}

#[derive(Args)]
struct SearchArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, env = "GSNNA_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    kind: Option<KindArg>,
    #[arg(long)]
    family: Option<FamilyArg>,
    /// Candidates per iteration.
    #[arg(long)]
    evals: Option<usize>,
    #[arg(long)]
    depth_cap: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_concurrency: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

impl SearchArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                RunConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        let s = &mut cfg.search;
        if let Some(k) = self.kind {
            s.kind = match k {
                KindArg::Gsnna => SearchKind::Gsnna,
                KindArg::Random => SearchKind::Random,
            };
        }
        if let Some(f) = self.family {
            s.family = match f {
                FamilyArg::Mlp => Family::Mlp,
                FamilyArg::Cnn => Family::Cnn,
            };
        }
        s.evals_per_iteration = self.evals.unwrap_or(s.evals_per_iteration);
        s.depth_cap = self.depth_cap.unwrap_or(s.depth_cap);
        s.score_threshold = self.threshold.unwrap_or(s.score_threshold);
        s.master_seed = self.seed.unwrap_or(s.master_seed);
        if self.max_concurrency.is_some() {
            s.max_concurrency = self.max_concurrency;
        }
        if self.max_epochs.is_some() {
            cfg.training.max_epochs = self.max_epochs;
        }
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        Ok(cfg)
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenEggbox { count, seed, grid, out } => {
            run::gen_eggbox_csv(count, seed, grid, &out)?;
            println!("wrote {count} rows to {}", out.display());
        }
        Command::Search(args) => {
            let cfg = args.resolve()?;
            let outcome = run::search(&cfg)?;
            run::print_summary(&outcome.report, &cfg.output.dir);
        }
        Command::Eval { model, data, json } => {
            let (saved, eval) = run::eval(&model, &data)?;
            if json {
                let value = serde_json::json!({ "metric": saved.metric, "score": eval.score, "accuracy": eval.accuracy });
                println!("{value}");
            } else {
                println!("{}: {}", saved.metric, eval.score);
                if let Some(acc) = eval.accuracy {
                    println!("accuracy: {acc}");
                }
            }
        }
        Command::SweepReport { report, out } => run::sweep_report(&report, out.as_ref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
