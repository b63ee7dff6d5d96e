use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokgraft::bpe::{count_token_frequencies, save_tokenizer, BpeTrainer};
use tokgraft::PreTokenizer;

use super::{read_texts, tokenizer};
use crate::config::{parent, required, resolve, write_effective, UsageError};

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainArgs {
    /// Training corpus (`.jsonl` documents or plain text, one per line).
    #[arg(long, num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corpus: Vec<PathBuf>,
    /// Total vocabulary size: 256 byte units + learned tokens + specials.
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Special tokens appended after the learned tokens.
    #[arg(long = "special", num_args = 1..)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specials: Option<Vec<String>>,
    #[arg(long)]
    pub pretokenizer: Option<PreTokenizer>,
}

pub fn train(flags: TrainArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("train", flags, config)?;
    if args.corpus.is_empty() {
        return Err(UsageError::new("missing required --corpus").into());
    }
    let vocab_size = required(&args.vocab_size, "vocab-size")?;
    let out = required(&args.out, "out")?;
    let specials = args.specials.clone().unwrap_or_else(|| vec!["<|endoftext|>".to_string()]);
    let texts = read_texts(&args.corpus)?;
    log::info!("training on {} documents, vocab size {vocab_size}", texts.len());
    let tok = BpeTrainer::new(vocab_size)
        .with_specials(specials)
        .with_pretokenizer(args.pretokenizer.unwrap_or_default())
        .train(&texts)?;
    save_tokenizer(&tok, &out)?;
    write_effective("train", &args, &out)?;
    Ok(json!({
        "command": "train",
        "out": out,
        "vocab_size": tok.vocab_size(),
        "merges": tok.merges().len(),
        "documents": texts.len(),
    }))
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeArgs {
    #[arg(long)]
    pub tokenizer: Option<PathBuf>,
    /// Text to encode; standard input when absent.
    #[arg(long)]
    pub text: Option<String>,
    /// File whose raw bytes are encoded.
    #[arg(long, conflicts_with = "text")]
    pub input: Option<PathBuf>,
}

pub fn encode(flags: EncodeArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("encode", flags, config)?;
    let tok = tokenizer(&required(&args.tokenizer, "tokenizer")?)?;
    let bytes = match (&args.text, &args.input) {
        (Some(t), _) => t.clone().into_bytes(),
        (None, Some(p)) => {
            crate::config::input(p)?;
            std::fs::read(p).with_context(|| format!("reading {}", p.display()))?
        }
        (None, None) => {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf)?;
            buf
        }
    };
    Ok(json!(tok.encode(&bytes)))
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeArgs {
    #[arg(long)]
    pub tokenizer: Option<PathBuf>,
    /// Ids as a JSON array or separated by whitespace/commas; standard input
    /// when absent.
    #[arg(long)]
    pub ids: Option<String>,
}

fn parse_ids(text: &str) -> anyhow::Result<Vec<u32>> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| UsageError::new(format!("bad id list: {e}")).into());
    }
    trimmed
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| UsageError::new(format!("bad token id {s:?}")).into()))
        .collect()
}

pub fn decode(flags: DecodeArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("decode", flags, config)?;
    let tok = tokenizer(&required(&args.tokenizer, "tokenizer")?)?;
    let text = match &args.ids {
        Some(s) => s.clone(),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let bytes = tok.decode(&parse_ids(&text)?)?;
    let mut out = std::io::stdout().lock();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(Value::Null)
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequenciesArgs {
    #[arg(long)]
    pub tokenizer: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corpus: Vec<PathBuf>,
    /// Output JSON file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Label stored in the table; defaults to the first corpus file name.
    #[arg(long)]
    pub corpus_id: Option<String>,
}

pub fn frequencies(flags: FrequenciesArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("frequencies", flags, config)?;
    let tok = tokenizer(&required(&args.tokenizer, "tokenizer")?)?;
    if args.corpus.is_empty() {
        return Err(UsageError::new("missing required --corpus").into());
    }
    let out = required(&args.out, "out")?;
    let texts = read_texts(&args.corpus)?;
    let id = args.corpus_id.clone().unwrap_or_else(|| {
        args.corpus[0]
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let table = count_token_frequencies(&tok, &texts, id)?;
    write_effective("frequencies", &args, parent(&out))?;
    std::fs::write(&out, serde_json::to_string(&table)? + "\n").with_context(|| format!("writing {}", out.display()))?;
    Ok(json!({
        "command": "frequencies",
        "out": out,
        "total": table.total(),
        "unused_ids": table.counts.iter().filter(|&&c| c == 0).count(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_lists() {
        assert_eq!(parse_ids("[1, 2,3]").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_ids("4 5,6\n").unwrap(), vec![4, 5, 6]);
        assert!(parse_ids("").unwrap().is_empty());
        assert!(parse_ids("x").is_err());
    }
}
