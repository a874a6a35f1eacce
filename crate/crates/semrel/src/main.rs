//! Thin CLI over the pipeline phases. All logic lives in the library;
//! this binary parses arguments, runs one phase, and maps errors to exit
//! codes (0 success, 1 validation, 2 runtime, 3 missing prerequisite).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semrel::eval::EvalReport;
use semrel::pipeline::{load_config, run_phase, Phase, PhaseStatus, PipelineConfig, RunOptions};

#[derive(Parser)]
#[command(
    name = "semrel",
    about = "Build and evaluate a semantic-relations corpus in file-backed phases",
    version
)]
struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, default_value = "semrel.toml")]
    config: PathBuf,

    /// Re-run the phase even when inputs and config are unchanged.
    #[arg(long, global = true)]
    force: bool,

    /// Validate and report without writing artifacts; for `enrich`,
    /// prints the cost estimate.
    #[arg(long, global = true)]
    dry_run: bool,

    /// Use the seeded deterministic provider instead of the HTTP backend.
    #[arg(long, global = true)]
    mock_provider: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed the lexicon terms using the word-vector file.
    Embed,
    /// Cluster embedded terms with the distance-threshold cut.
    Cluster,
    /// Render prompts, dispatch clusters to the provider, post-process.
    Enrich,
    /// Parse and filter the synonym dictionary, remove overlaps.
    Integrate,
    /// Merge LLM and dictionary pairs into the final corpus.
    Assemble,
    /// Compute corpus distribution and textual statistics.
    Stats,
    /// Run retrieval accuracy and optional classification metrics.
    Eval,
}

impl Command {
    fn phase(&self) -> Phase {
        match self {
            Command::Embed => Phase::Embed,
            Command::Cluster => Phase::Cluster,
            Command::Enrich => Phase::Enrich,
            Command::Integrate => Phase::Integrate,
            Command::Assemble => Phase::Assemble,
            Command::Stats => Phase::Stats,
            Command::Eval => Phase::Eval,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let phase = cli.command.phase();

    let config = match load_config(&cli.config) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(1);
        }
    };

    let options = RunOptions {
        force: cli.force,
        dry_run: cli.dry_run,
        mock_provider: cli.mock_provider,
    };
    match run_phase(phase, &config, &options) {
        Ok(outcome) => {
            let status = match outcome.status {
                PhaseStatus::Ran => "done",
                PhaseStatus::UpToDate => "up to date (use --force to re-run)",
                PhaseStatus::DryRun => "dry run",
            };
            println!("{}: {}", phase, status);
            for (key, value) in &outcome.counters {
                println!("  {} = {}", key, value);
            }
            if outcome.status == PhaseStatus::Ran {
                print_phase_report(phase, &config);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// After `eval`, render the human-readable report next to the counters.
fn print_phase_report(phase: Phase, config: &PipelineConfig) {
    if phase != Phase::Eval {
        return;
    }
    let path = config.paths.output_dir.join("eval_report.json");
    let Ok(body) = std::fs::read_to_string(&path) else {
        return;
    };
    if let Ok(report) = serde_json::from_str::<EvalReport>(&body) {
        println!("\n{}", report);
    }
}
