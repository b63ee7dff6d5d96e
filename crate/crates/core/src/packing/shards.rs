//! JSON-lines training shards plus a checksummed index.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PackMode, PackedSequence, PAD_ARTICLE};
use crate::bpe::TokenId;
use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "index.json";
pub const SHARD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardConfig {
    pub seq_len: usize,
    pub mode: PackMode,
    pub pad_id: TokenId,
    pub separator_id: Option<TokenId>,
    pub sequences_per_shard: usize,
    /// Mix manifest the packed stream came from.
    pub mix_manifest: Option<String>,
    /// Free-form run metadata (training hyperparameters and the like).
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub file: String,
    pub sha256: String,
    pub sequences: usize,
    /// Non-padding tokens.
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardIndex {
    pub format_version: u32,
    pub config: ShardConfig,
    pub total_sequences: usize,
    pub total_tokens: u64,
    pub shards: Vec<ShardEntry>,
}

/// Writes `sequences` into `dir` as `shard-NNNNN.jsonl` files and an
/// `index.json`.
pub fn emit_training_shards(
    sequences: &[PackedSequence],
    dir: impl AsRef<Path>,
    config: &ShardConfig,
) -> Result<ShardIndex> {
    let dir = dir.as_ref();
    if config.sequences_per_shard == 0 {
        return Err(Error::InvalidArgument("sequences_per_shard must be positive".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut shards = Vec::new();
    for (n, chunk) in sequences.chunks(config.sequences_per_shard).enumerate() {
        let file = format!("shard-{n:05}.jsonl");
        let path = dir.join(&file);
        let mut bytes = Vec::new();
        let mut tokens = 0u64;
        for seq in chunk {
            serde_json::to_writer(&mut bytes, seq).map_err(|e| Error::json(&path, e))?;
            bytes.push(b'\n');
            tokens += seq.content_tokens() as u64;
        }
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        shards.push(ShardEntry {
            file,
            sha256: hex::encode(Sha256::digest(&bytes)),
            sequences: chunk.len(),
            tokens,
        });
    }
    let index = ShardIndex {
        format_version: SHARD_FORMAT_VERSION,
        config: config.clone(),
        total_sequences: sequences.len(),
        total_tokens: shards.iter().map(|s| s.tokens).sum(),
        shards,
    };
    let path = dir.join(INDEX_FILE);
    let mut text = serde_json::to_string_pretty(&index).map_err(|e| Error::json(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(index)
}

/// Reads shards back, verifying checksums and per-shard counts.
pub fn read_training_shards(dir: impl AsRef<Path>) -> Result<(ShardIndex, Vec<PackedSequence>)> {
    let dir = dir.as_ref();
    let index_path = dir.join(INDEX_FILE);
    let text = fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
    let index: ShardIndex =
        serde_json::from_str(&text).map_err(|e| Error::parse(&index_path, e.line(), e.to_string()))?;

    let mut sequences = Vec::with_capacity(index.total_sequences);
    for entry in &index.shards {
        let path: PathBuf = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        if digest != entry.sha256 {
            return Err(Error::Corruption {
                path,
                message: format!("checksum {digest} does not match index {}", entry.sha256),
            });
        }
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Corruption {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let mut count = 0;
        for (i, line) in text.lines().enumerate() {
            let mut seq: PackedSequence =
                serde_json::from_str(line).map_err(|e| Error::parse(&path, i + 1, e.to_string()))?;
            seq.mode = index.config.mode;
            check_sequence(&seq, index.config.seq_len).map_err(|message| Error::Corruption {
                path: path.clone(),
                message: format!("line {}: {message}", i + 1),
            })?;
            sequences.push(seq);
            count += 1;
        }
        if count != entry.sequences {
            return Err(Error::Corruption {
                path,
                message: format!("{count} sequences found, index lists {}", entry.sequences),
            });
        }
    }
    Ok((index, sequences))
}

fn check_sequence(seq: &PackedSequence, seq_len: usize) -> std::result::Result<(), String> {
    if seq.token_ids.len() != seq_len
        || seq.article_ids.len() != seq_len
        || seq.loss_weights.len() != seq_len
    {
        return Err(format!("vectors must all have length {seq_len}"));
    }
    if seq
        .article_ids
        .iter()
        .zip(&seq.loss_weights)
        .any(|(&a, &w)| a == PAD_ARTICLE && w != 0.0)
    {
        return Err("padding position with non-zero loss weight".into());
    }
    Ok(())
}
