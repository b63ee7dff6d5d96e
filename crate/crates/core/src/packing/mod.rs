//! Packing tokenized examples into fixed-length training sequences.
//!
//! Every position carries the id of the article it came from (0 marks
//! padding) and a loss weight. Two layouts are supported:
//!
//! * pretraining: articles are laid end to end and an article that does not
//!   fit spills into the next sequence, so no token is lost;
//! * instruction tuning: each prompt/completion example is placed whole or
//!   starts a new sequence, over-long examples are discarded, and prompt
//!   positions get loss weight 0.

mod shards;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use shards::{
    emit_training_shards, read_training_shards, ShardConfig, ShardEntry, ShardIndex,
    INDEX_FILE, SHARD_FORMAT_VERSION,
};

use crate::bpe::{TokenId, Tokenizer};
use crate::corpus::Document;
use crate::error::{Error, Result};

pub const PAD_ARTICLE: u64 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedExample {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prompt_ids: Vec<TokenId>,
    pub completion_ids: Vec<TokenId>,
    pub article_id: u64,
}

impl TokenizedExample {
    pub fn len(&self) -> usize {
        self.prompt_ids.len() + self.completion_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackMode {
    Pretrain,
    It,
}

impl fmt::Display for PackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PackMode::Pretrain => "pretrain",
            PackMode::It => "it",
        })
    }
}

impl FromStr for PackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain" => Ok(PackMode::Pretrain),
            "it" => Ok(PackMode::It),
            other => Err(Error::InvalidArgument(format!("unknown pack mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackConfig {
    pub seq_len: usize,
    pub pad_id: TokenId,
    /// Appended after every example (weight 1.0, same article) when set.
    pub separator_id: Option<TokenId>,
}

impl PackConfig {
    pub fn new(seq_len: usize) -> Self {
        Self {
            seq_len,
            pad_id: 0,
            separator_id: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.seq_len < 2 {
            return Err(Error::InvalidArgument(format!(
                "sequence length must be at least 2, got {}",
                self.seq_len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedSequence {
    pub token_ids: Vec<TokenId>,
    /// 0 for padding.
    pub article_ids: Vec<u64>,
    pub loss_weights: Vec<f32>,
    #[serde(skip, default = "default_mode")]
    pub mode: PackMode,
}

fn default_mode() -> PackMode {
    PackMode::Pretrain
}

impl PackedSequence {
    fn empty(mode: PackMode, capacity: usize) -> Self {
        Self {
            token_ids: Vec::with_capacity(capacity),
            article_ids: Vec::with_capacity(capacity),
            loss_weights: Vec::with_capacity(capacity),
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    fn push(&mut self, token: TokenId, article: u64, weight: f32) {
        self.token_ids.push(token);
        self.article_ids.push(article);
        self.loss_weights.push(weight);
    }

    fn pad_to(&mut self, len: usize, pad_id: TokenId) {
        while self.len() < len {
            self.push(pad_id, PAD_ARTICLE, 0.0);
        }
    }

    /// Non-padding positions.
    pub fn content_tokens(&self) -> usize {
        self.article_ids.iter().filter(|&&a| a != PAD_ARTICLE).count()
    }

    /// `mask[i][j]` is true when positions `i` and `j` belong to the same
    /// article. Padding attends to nothing.
    pub fn attention_mask(&self) -> Vec<Vec<bool>> {
        self.article_ids
            .iter()
            .map(|&a| {
                self.article_ids
                    .iter()
                    .map(|&b| a != PAD_ARTICLE && a == b)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discard {
    pub article_id: u64,
    pub length: usize,
    pub reason: String,
}

struct IdCheck(HashSet<u64>);

impl IdCheck {
    fn check(&mut self, ex: &TokenizedExample) -> Result<()> {
        if ex.article_id == PAD_ARTICLE {
            return Err(Error::InvalidArgument("article id 0 is reserved for padding".into()));
        }
        if ex.completion_ids.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "article {} has no completion tokens",
                ex.article_id
            )));
        }
        if !self.0.insert(ex.article_id) {
            return Err(Error::InvalidArgument(format!(
                "article id {} appears more than once",
                ex.article_id
            )));
        }
        Ok(())
    }
}

/// Pretraining layout: contiguous articles, spilling across sequence
/// boundaries, final sequence padded.
pub fn pack_pretrain<I>(examples: I, config: &PackConfig) -> Result<Vec<PackedSequence>>
where
    I: IntoIterator<Item = TokenizedExample>,
{
    config.validate()?;
    let s = config.seq_len;
    let mut ids = IdCheck(HashSet::new());
    let mut out = Vec::new();
    let mut current = PackedSequence::empty(PackMode::Pretrain, s);
    for ex in examples {
        ids.check(&ex)?;
        if !ex.prompt_ids.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "article {} has prompt tokens; pretraining examples must not",
                ex.article_id
            )));
        }
        let tokens = ex.completion_ids.iter().copied().chain(config.separator_id);
        for tok in tokens {
            current.push(tok, ex.article_id, 1.0);
            if current.len() == s {
                out.push(std::mem::replace(&mut current, PackedSequence::empty(PackMode::Pretrain, s)));
            }
        }
    }
    if !current.is_empty() {
        current.pad_to(s, config.pad_id);
        out.push(current);
    }
    Ok(out)
}

/// Instruction-tuning layout: greedy whole-example placement, over-long
/// examples discarded, prompts weighted 0.
pub fn pack_it<I>(examples: I, config: &PackConfig) -> Result<(Vec<PackedSequence>, Vec<Discard>)>
where
    I: IntoIterator<Item = TokenizedExample>,
{
    config.validate()?;
    let s = config.seq_len;
    let sep = usize::from(config.separator_id.is_some());
    let mut ids = IdCheck(HashSet::new());
    let mut out = Vec::new();
    let mut discarded = Vec::new();
    let mut current = PackedSequence::empty(PackMode::It, s);
    for ex in examples {
        ids.check(&ex)?;
        let len = ex.len() + sep;
        if len > s {
            discarded.push(Discard {
                article_id: ex.article_id,
                length: len,
                reason: format!("length {len} exceeds sequence length {s}"),
            });
            continue;
        }
        if current.len() + len > s {
            current.pad_to(s, config.pad_id);
            out.push(std::mem::replace(&mut current, PackedSequence::empty(PackMode::It, s)));
        }
        for &tok in &ex.prompt_ids {
            current.push(tok, ex.article_id, 0.0);
        }
        for &tok in &ex.completion_ids {
            current.push(tok, ex.article_id, 1.0);
        }
        if let Some(tok) = config.separator_id {
            current.push(tok, ex.article_id, 1.0);
        }
    }
    if !current.is_empty() {
        current.pad_to(s, config.pad_id);
        out.push(current);
    }
    Ok((out, discarded))
}

/// Tokenizes documents as pretraining examples; article ids are 1, 2, ...
/// in stream order. Documents that encode to nothing are skipped.
pub fn examples_from_documents(docs: &[Document], tokenizer: &Tokenizer) -> Vec<TokenizedExample> {
    use rayon::prelude::*;
    let encoded: Vec<Vec<TokenId>> = docs.par_iter().map(|d| tokenizer.encode(d.text.as_bytes())).collect();
    encoded
        .into_iter()
        .filter(|ids| !ids.is_empty())
        .enumerate()
        .map(|(i, completion_ids)| TokenizedExample {
            prompt_ids: Vec::new(),
            completion_ids,
            article_id: i as u64 + 1,
        })
        .collect()
}
