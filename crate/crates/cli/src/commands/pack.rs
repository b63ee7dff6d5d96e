use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokgraft::corpus::{read_jsonl, write_jsonl_records};
use tokgraft::packing::{
    emit_training_shards, examples_from_documents, pack_it, pack_pretrain, PackConfig, PackMode, ShardConfig,
    TokenizedExample,
};

use super::tokenizer;
use crate::config::{input, required, resolve, write_effective, UsageError};

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackArgs {
    /// JSON-lines input: tokenized examples (`prompt_ids`, `completion_ids`,
    /// `article_id`), or documents when `--tokenizer` is given.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Tokenize document input with this tokenizer (pretrain mode only).
    #[arg(long)]
    pub tokenizer: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<PackMode>,
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long)]
    pub pad_id: Option<u32>,
    /// Token appended after every example.
    #[arg(long)]
    pub separator_id: Option<u32>,
    /// Output directory for shards and index.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequences_per_shard: Option<usize>,
    /// Mix manifest the input was drawn from, recorded in the index.
    #[arg(long)]
    pub mix_manifest: Option<String>,
    /// `KEY=VALUE` recorded in the index; VALUE is parsed as JSON when it can be.
    #[arg(long = "meta", num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metadata: Vec<String>,
}

fn read_examples(path: &Path) -> anyhow::Result<Vec<TokenizedExample>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex = serde_json::from_str(&line).map_err(|e| tokgraft::Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(ex);
    }
    Ok(out)
}

fn parse_metadata(items: &[String]) -> anyhow::Result<BTreeMap<String, Value>> {
    items
        .iter()
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| UsageError::new(format!("metadata {item:?} is not KEY=VALUE")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            Ok((k.to_string(), value))
        })
        .collect()
}

pub fn pack(flags: PackArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("pack", flags, config)?;
    let path = required(&args.input, "input")?;
    let out = required(&args.out, "out")?;
    let seq_len = required(&args.seq_len, "seq-len")?;
    let mode = args.mode.unwrap_or(PackMode::Pretrain);
    input(&path)?;
    let metadata = parse_metadata(&args.metadata)?;

    let examples = match &args.tokenizer {
        Some(dir) => {
            if mode == PackMode::It {
                return Err(UsageError::new("--tokenizer takes plain documents; instruction tuning needs tokenized prompt/completion input").into());
            }
            let tok = tokenizer(dir)?;
            examples_from_documents(&read_jsonl(&path)?, &tok)
        }
        None => read_examples(&path)?,
    };
    let cfg = PackConfig {
        seq_len,
        pad_id: args.pad_id.unwrap_or(0),
        separator_id: args.separator_id,
    };
    let input_tokens: usize = examples.iter().map(TokenizedExample::len).sum();
    let input_examples = examples.len();
    let (sequences, discards) = match mode {
        PackMode::Pretrain => (pack_pretrain(examples, &cfg)?, Vec::new()),
        PackMode::It => pack_it(examples, &cfg)?,
    };

    write_effective("pack", &args, &out)?;
    let index = emit_training_shards(
        &sequences,
        &out,
        &ShardConfig {
            seq_len,
            mode,
            pad_id: cfg.pad_id,
            separator_id: cfg.separator_id,
            sequences_per_shard: args.sequences_per_shard.unwrap_or(1024),
            mix_manifest: args.mix_manifest.clone(),
            metadata,
        },
    )?;
    write_jsonl_records(out.join("discards.jsonl"), &discards)?;
    Ok(json!({
        "command": "pack",
        "mode": mode,
        "input_examples": input_examples,
        "input_tokens": input_tokens,
        "sequences": index.total_sequences,
        "packed_tokens": index.total_tokens,
        "shards": index.shards.len(),
        "discarded": discards.len(),
        "discards": discards,
        "out": out,
    }))
}
