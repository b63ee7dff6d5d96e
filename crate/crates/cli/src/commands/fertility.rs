use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokgraft::fertility::{
    fertility_named, fertility_sweep, parse_conllu, write_sweep_csv, FertilityOptions, SweepConfig, SweepRow, Treebank,
};

use super::{frequency_table, read_texts, tokenizer};
use crate::config::{input, parent, required, resolve, write_effective, UsageError};

fn treebanks(paths: &[PathBuf]) -> anyhow::Result<Vec<Treebank>> {
    if paths.is_empty() {
        return Err(UsageError::new("missing required --treebank").into());
    }
    paths
        .iter()
        .map(|p| {
            input(p)?;
            Ok(parse_conllu(p)?)
        })
        .collect()
}

fn write_csv(rows: &[SweepRow], path: &Path) -> anyhow::Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    write_sweep_csv(rows, &mut w).with_context(|| format!("writing {}", path.display()))?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FertilityArgs {
    #[arg(long)]
    pub tokenizer: Option<PathBuf>,
    /// CoNLL-U files.
    #[arg(long = "treebank", num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub treebanks: Vec<PathBuf>,
    /// CSV output; rows carry k = 0.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    /// Encode every word with a leading space.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub prefix_space: Option<bool>,
}

pub fn fertility(flags: FertilityArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("fertility", flags, config)?;
    let tok_path = required(&args.tokenizer, "tokenizer")?;
    let tok = tokenizer(&tok_path)?;
    let tbs = treebanks(&args.treebanks)?;
    let opts = FertilityOptions {
        prefix_space: args.prefix_space.unwrap_or(false),
    };
    let tok_id = tok_path.display().to_string();
    let reports = tbs
        .iter()
        .map(|tb| fertility_named(&tok, &tok_id, tb, opts))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(csv) = &args.csv_out {
        let rows: Vec<SweepRow> = reports
            .iter()
            .map(|r| SweepRow {
                k: 0,
                treebank: r.treebank_id.clone(),
                word_count: r.word_count,
                token_count: r.token_count,
                fertility: r.fertility,
                replaced: 0,
            })
            .collect();
        write_effective("fertility", &args, parent(csv))?;
        write_csv(&rows, csv)?;
    }
    Ok(json!({ "command": "fertility", "reports": reports }))
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// New-language corpus.
    #[arg(long, num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corpus: Vec<PathBuf>,
    #[arg(long = "treebank", num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub treebanks: Vec<PathBuf>,
    /// Comma-separated k values; 0 is the unmodified base.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_list: Vec<usize>,
    /// Token frequency table of the base tokenizer; index order when absent.
    #[arg(long)]
    pub freq: Option<PathBuf>,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub prefix_space: Option<bool>,
}

pub fn sweep(flags: SweepArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("sweep", flags, config)?;
    let base = tokenizer(&required(&args.base, "base")?)?;
    if args.k_list.is_empty() {
        return Err(UsageError::new("missing required --k-list").into());
    }
    let tbs = treebanks(&args.treebanks)?;
    let corpus = if args.k_list.iter().any(|&k| k > 0) {
        if args.corpus.is_empty() {
            return Err(UsageError::new("missing required --corpus").into());
        }
        read_texts(&args.corpus)?
    } else {
        Vec::new()
    };
    let table = args.freq.as_deref().map(frequency_table).transpose()?;
    let rows = fertility_sweep(
        &base,
        &corpus,
        &tbs,
        &SweepConfig {
            k_values: args.k_list.clone(),
            frequency: table.as_ref(),
            fertility: FertilityOptions {
                prefix_space: args.prefix_space.unwrap_or(false),
            },
        },
    )?;
    if let Some(csv) = &args.csv_out {
        write_effective("sweep", &args, parent(csv))?;
        write_csv(&rows, csv)?;
    }
    Ok(json!({ "command": "sweep", "rows": rows }))
}
