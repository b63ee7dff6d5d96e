//! `tokgraft` command-line entry point.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::UsageError;

#[derive(Parser)]
#[command(name = "tokgraft", version = tokgraft::VERSION, about = "Byte-level BPE vocabulary surgery and bilingual data preparation")]
struct Cli {
    /// JSON file of flag values for the subcommand; explicit flags win.
    /// Defaults to `$TOKGRAFT_CONFIG_DIR/<subcommand>.json` when that exists.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, default_value = "info", value_parser = ["error", "warn", "info", "debug", "trace", "off"])]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a byte-level BPE tokenizer.
    Train(commands::tokenizer::TrainArgs),
    /// Encode text to token ids (JSON array on stdout).
    Encode(commands::tokenizer::EncodeArgs),
    /// Decode token ids to raw bytes on stdout.
    Decode(commands::tokenizer::DecodeArgs),
    /// Count how often each token id occurs in a corpus.
    Frequencies(commands::tokenizer::FrequenciesArgs),
    /// Tokens per word on CoNLL-U treebanks.
    Fertility(commands::fertility::FertilityArgs),
    /// Fertility of surgically adapted tokenizers over a list of k.
    Sweep(commands::fertility::SweepArgs),
    /// Replace base tokens with new-language tokens in place.
    Surgery(commands::surgery::SurgeryArgs),
    /// Remove near-duplicate documents.
    Dedup(commands::corpus::DedupArgs),
    /// Interleave corpora at target ratios.
    Mix(commands::corpus::MixArgs),
    /// Pack examples into fixed-length training shards.
    Pack(commands::pack::PackArgs),
}

fn run(cli: Cli) -> anyhow::Result<serde_json::Value> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(UsageError::new("--threads must be positive").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Train(a) => commands::tokenizer::train(a, cfg),
        Command::Encode(a) => commands::tokenizer::encode(a, cfg),
        Command::Decode(a) => commands::tokenizer::decode(a, cfg),
        Command::Frequencies(a) => commands::tokenizer::frequencies(a, cfg),
        Command::Fertility(a) => commands::fertility::fertility(a, cfg),
        Command::Sweep(a) => commands::fertility::sweep(a, cfg),
        Command::Surgery(a) => commands::surgery::surgery(a, cfg),
        Command::Dedup(a) => commands::corpus::dedup(a, cfg),
        Command::Mix(a) => commands::corpus::mix(a, cfg),
        Command::Pack(a) => commands::pack::pack(a, cfg),
    }
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    if err.downcast_ref::<UsageError>().is_some() {
        return (2, "usage");
    }
    if let Some(e) = err.downcast_ref::<tokgraft::Error>() {
        let usage = match e {
            tokgraft::Error::InvalidArgument(_) | tokgraft::Error::InvalidConfiguration(_) => true,
            tokgraft::Error::AtK { source, .. } => matches!(
                **source,
                tokgraft::Error::InvalidArgument(_) | tokgraft::Error::InvalidConfiguration(_)
            ),
            _ => false,
        };
        return (if usage { 2 } else { 1 }, e.kind());
    }
    (1, "runtime")
}

/// The error chain, skipping causes the outer messages already spell out.
fn message(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let c = cause.to_string();
        if !msg.contains(&c) {
            msg = format!("{msg}: {c}");
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(summary) => {
            if !summary.is_null() {
                let mut out = std::io::stdout().lock();
                let _ = writeln!(out, "{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let (code, kind) = exit_code(&err);
            let error = json!({
                "error": kind,
                "message": message(&err),
                "exit_code": code,
            });
            eprintln!("{error}");
            ExitCode::from(code)
        }
    }
}
