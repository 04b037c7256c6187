use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wds_core::harness::{self, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "wds", version, about = "Waveform-defined security experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER sweep for the modem, legitimate or eavesdropper receivers.
    Ber(RunArgs),
    /// Train the signal-format classifier and evaluate it per Es/N0.
    Classify(RunArgs),
    /// BER of every true/assumed BCF pair, weighted by a confusion matrix.
    MappingBer(RunArgs),
    /// Operation counts for OFDM and SEFDM symbol generation.
    Complexity(RunArgs),
    /// Write a labelled dataset and its CSV manifest.
    GenDataset(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "kind": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string()),
    };
    let (kind, args) = match cli.command {
        Command::Ber(a) => (ExperimentKind::Ber, a),
        Command::Classify(a) => (ExperimentKind::Classify, a),
        Command::MappingBer(a) => (ExperimentKind::MappingBer, a),
        Command::Complexity(a) => (ExperimentKind::Complexity, a),
        Command::GenDataset(a) => (ExperimentKind::GenDataset, a),
    };
    let result = ExperimentConfig::load(&args.config, kind).and_then(|cfg| {
        let cfg = match args.seed {
            Some(s) => cfg.with_seed(s),
            None => cfg,
        };
        harness::run(&cfg, &args.out)
    });
    match result {
        Ok(out) => {
            let files: Vec<String> = out.files.iter().map(|p| p.display().to_string()).collect();
            println!(
                "{}",
                json!({ "experiment": kind.name(), "seed": out.table.seed, "rows": out.table.rows.len(), "files": files })
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
