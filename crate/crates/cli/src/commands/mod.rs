pub mod corpus;
pub mod fertility;
pub mod pack;
pub mod surgery;
pub mod tokenizer;

use std::path::{Path, PathBuf};

use anyhow::Context;
use tokgraft::bpe::{load_tokenizer, TokenFrequencyTable};
use tokgraft::corpus::read_jsonl;
use tokgraft::Tokenizer;

use crate::config::input;

/// Document texts: `.jsonl` files hold document records, anything else is
/// plain text with one document per non-empty line.
pub fn read_texts(paths: &[PathBuf]) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::new();
    for p in paths {
        input(p)?;
        if p.extension().is_some_and(|e| e == "jsonl") {
            out.extend(read_jsonl(p)?.into_iter().map(|d| d.text));
        } else {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            out.extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
        }
    }
    Ok(out)
}

pub fn tokenizer(dir: &Path) -> anyhow::Result<Tokenizer> {
    input(dir)?;
    Ok(load_tokenizer(dir)?)
}

pub fn frequency_table(path: &Path) -> anyhow::Result<TokenFrequencyTable> {
    input(path)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing frequency table {}", path.display()))
}
