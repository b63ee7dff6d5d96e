//! Tokenizer fertility: the average number of tokens per treebank word.

mod treebank;

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use treebank::{parse_conllu, parse_conllu_str, Treebank};

use crate::bpe::{TokenFrequencyTable, Tokenizer};
use crate::error::{Error, Result};
use crate::surgery::{replace_with_trained, truncate_learned, FrequencySource, SurgeryPlan};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FertilityOptions {
    /// Prepend a space to every word before encoding. GPT-2 vocabularies
    /// store most word-initial tokens with a leading space.
    pub prefix_space: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilityReport {
    pub tokenizer_id: String,
    pub treebank_id: String,
    pub word_count: usize,
    pub token_count: usize,
    pub fertility: f64,
}

/// Encodes every word on its own and divides total tokens by word count.
pub fn fertility(
    tokenizer: &Tokenizer,
    treebank: &Treebank,
    options: FertilityOptions,
) -> Result<FertilityReport> {
    fertility_named(tokenizer, "tokenizer", treebank, options)
}

pub fn fertility_named(
    tokenizer: &Tokenizer,
    tokenizer_id: &str,
    treebank: &Treebank,
    options: FertilityOptions,
) -> Result<FertilityReport> {
    let word_count = treebank.word_count();
    if word_count == 0 {
        return Err(Error::InvalidArgument(format!(
            "treebank {} has no words",
            treebank.source_id
        )));
    }
    let token_count = count_word_tokens(tokenizer, &treebank.words, options);
    Ok(FertilityReport {
        tokenizer_id: tokenizer_id.to_string(),
        treebank_id: treebank.source_id.clone(),
        word_count,
        token_count,
        fertility: token_count as f64 / word_count as f64,
    })
}

fn count_word_tokens(tokenizer: &Tokenizer, words: &[String], options: FertilityOptions) -> usize {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for w in words {
        *freq.entry(w.as_str()).or_default() += 1;
    }
    let unique: Vec<(&str, usize)> = freq.into_iter().collect();
    unique
        .par_iter()
        .map(|&(word, n)| {
            let tokens = if options.prefix_space {
                tokenizer.encode(format!(" {word}")).len()
            } else {
                tokenizer.encode(word).len()
            };
            tokens * n
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub treebank: String,
    pub word_count: usize,
    pub token_count: usize,
    pub fertility: f64,
    /// Tokens actually replaced, `k - o`.
    pub replaced: usize,
}

#[derive(Debug, Clone)]
pub struct SweepConfig<'a> {
    pub k_values: Vec<usize>,
    pub frequency: Option<&'a TokenFrequencyTable>,
    pub fertility: FertilityOptions,
}

/// Fertility of the adapted tokenizer for every replacement budget `k` on
/// every treebank. `k = 0` is the unmodified base tokenizer.
///
/// The new-language tokenizer is trained once at the largest `k`; smaller
/// budgets use its prefix, which is what training at that size would give.
pub fn fertility_sweep(
    base: &Tokenizer,
    new_lang_corpus: &[String],
    treebanks: &[Treebank],
    config: &SweepConfig<'_>,
) -> Result<Vec<SweepRow>> {
    let protected = base.specials().len();
    for &k in &config.k_values {
        if k > 0 && k > base.vocab_size() - protected {
            return Err(Error::AtK {
                k,
                source: Box::new(Error::InvalidArgument(format!(
                    "k must be at most {} (vocabulary minus specials)",
                    base.vocab_size() - protected
                ))),
            });
        }
        if k > 0 && k < 256 {
            return Err(Error::AtK {
                k,
                source: Box::new(Error::InvalidArgument(
                    "k counts the 256 byte units and must be at least 256".into(),
                )),
            });
        }
    }
    if treebanks.is_empty() {
        return Err(Error::InvalidArgument("no treebanks given".into()));
    }

    let max_k = config.k_values.iter().copied().max().unwrap_or(0);
    let trained = if max_k > 0 {
        if new_lang_corpus.is_empty() {
            return Err(Error::InvalidArgument("new-language corpus is empty".into()));
        }
        Some(
            crate::bpe::BpeTrainer::new(max_k)
                .with_pretokenizer(base.pretokenizer())
                .train(new_lang_corpus)?,
        )
    } else {
        None
    };

    let frequency_source = match config.frequency {
        Some(table) => FrequencySource::Table(table.clone()),
        None => FrequencySource::IndexOrder,
    };

    let mut k_values = config.k_values.clone();
    k_values.sort_unstable();
    k_values.dedup();

    let per_k: Vec<Result<Vec<SweepRow>>> = k_values
        .par_iter()
        .map(|&k| {
            let (adapted, replaced) = if k == 0 {
                (None, 0)
            } else {
                let new_tok = truncate_learned(trained.as_ref().expect("trained when k > 0"), k)?;
                let plan = SurgeryPlan::new(base, k, frequency_source.clone())?;
                let result = replace_with_trained(base, &new_tok, &plan)?;
                let replaced = result.replaced.len();
                (Some(result.adapted), replaced)
            };
            let tok = adapted.as_ref().unwrap_or(base);
            treebanks
                .iter()
                .map(|tb| {
                    let report = fertility_named(tok, &format!("k{k}"), tb, config.fertility)?;
                    Ok(SweepRow {
                        k,
                        treebank: tb.source_id.clone(),
                        word_count: report.word_count,
                        token_count: report.token_count,
                        fertility: report.fertility,
                        replaced,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect();

    let mut rows = Vec::new();
    for (k, r) in k_values.iter().zip(per_k) {
        rows.extend(r.map_err(|e| match e {
            e @ Error::AtK { .. } => e,
            e => Error::AtK {
                k: *k,
                source: Box::new(e),
            },
        })?);
    }
    rows.sort_by(|a, b| (a.k, &a.treebank).cmp(&(b.k, &b.treebank)));
    Ok(rows)
}

/// Writes sweep rows as `k,treebank,word_count,token_count,fertility`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "k,treebank,word_count,token_count,fertility")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.4}",
            r.k,
            csv_field(&r.treebank),
            r.word_count,
            r.token_count,
            r.fertility
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
