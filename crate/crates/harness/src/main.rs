use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use explore_harness::dataset::{collect_log_paths, export_dataset, read_log};
use explore_harness::encode::EncodeOptions;
use explore_harness::plot::emit_plots;
use explore_harness::presets::{preset, preset_text};
use explore_harness::replay::replay_file;
use explore_harness::runner::{resolve_workers, run_experiment, SUMMARY_MD};
use explore_harness::{ExperimentConfig, HarnessError, Result};

#[derive(Parser)]
#[command(name = "mrexplore", version, about = "Seeded multi-agent exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Result directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in experiment preset.
    Preset {
        /// baseline-comparison, dropout-sweep, scalability-sweep or multi-maze.
        name: String,
        /// Episodes per matrix cell.
        #[arg(long)]
        episodes: Option<usize>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the preset's config text and exit.
        #[arg(long)]
        print: bool,
    },
    /// Replay episode logs and export decision tuples for pre-training.
    ExportDataset {
        /// A log file, a directory of logs, or a result directory.
        logs: PathBuf,
        /// Dataset index file; the binary sidecar is written next to it.
        out: PathBuf,
        /// Rotate the agent-centric frame to the agent's heading.
        #[arg(long)]
        rotate: bool,
    },
    /// Write coverage and trajectory SVGs for a result directory.
    Plot { result_dir: PathBuf },
    /// Re-run a logged episode and check it reproduces the log.
    Replay { log: PathBuf },
}

fn default_out(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| Path::new("results").join(&cfg.name))
}

fn run(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let workers = resolve_workers(cfg)?;
    eprintln!("running {} with {workers} worker(s) into {}", cfg.name, out.display());
    let outcome = run_experiment(cfg, out, workers);
    if let Ok(summary) = std::fs::read_to_string(out.join(SUMMARY_MD)) {
        print!("{summary}");
    }
    outcome.map(|_| ())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = out.unwrap_or_else(|| default_out(&cfg));
            run(&cfg, &out)
        }
        Command::Preset { name, episodes, seed, out, print } => {
            if print {
                let text = preset_text(&name).ok_or_else(|| HarnessError::Invalid(format!("unknown preset {name:?}")))?;
                print!("{text}");
                return Ok(());
            }
            let mut cfg = preset(&name)?;
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            cfg.check()?;
            let out = out.unwrap_or_else(|| default_out(&cfg));
            run(&cfg, &out)
        }
        Command::ExportDataset { logs, out, rotate } => {
            let paths = collect_log_paths(&logs)?;
            let logs = paths.iter().map(|p| read_log(p)).collect::<Result<Vec<_>>>()?;
            let summary = export_dataset(&logs, &out, EncodeOptions { rotate })?;
            println!("{} records from {} episodes written to {}", summary.records, summary.episodes, out.display());
            Ok(())
        }
        Command::Plot { result_dir } => {
            for p in emit_plots(&result_dir)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Replay { log } => {
            let r = replay_file(&log)?;
            println!(
                "replay ok: final ER {} after {} decisions and {} steps",
                r.replayed_er, r.decisions, r.steps
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
