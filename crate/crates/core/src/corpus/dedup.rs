//! Near-duplicate removal: MinHash + LSH banding for candidates, exact
//! Jaccard over unigram sets for the decision.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use super::document::Document;
use super::minhash::{jaccard, shingles, signature_of_set, HashFamily, MinHashSignature, DEFAULT_PERMUTATIONS};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.6;
/// Candidate probability a pair exactly at the threshold must reach when
/// bands and rows are chosen automatically.
pub const TARGET_RECALL_AT_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    /// Documents with Jaccard >= threshold against a kept document are dropped.
    pub threshold: f64,
    pub permutations: usize,
    pub bands: usize,
    pub rows: usize,
    pub seed: u64,
}

impl DedupConfig {
    /// Default permutation count with bands and rows picked by [`choose_bands`].
    pub fn new(threshold: f64) -> Self {
        let (bands, rows) = choose_bands(DEFAULT_PERMUTATIONS, threshold);
        Self {
            threshold,
            permutations: DEFAULT_PERMUTATIONS,
            bands,
            rows,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidConfiguration(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        if self.bands * self.rows != self.permutations {
            return Err(Error::InvalidConfiguration(format!(
                "bands ({}) x rows ({}) must equal permutations ({})",
                self.bands, self.rows, self.permutations
            )));
        }
        Ok(())
    }
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self::new(DEFAULT_THRESHOLD)
    }
}

/// Probability that a pair with Jaccard `j` shares at least one band.
pub fn candidate_probability(j: f64, bands: usize, rows: usize) -> f64 {
    1.0 - (1.0 - j.powi(rows as i32)).powi(bands as i32)
}

/// Splits `permutations` into `(bands, rows)`: the largest row count whose
/// candidate probability at `threshold` is still at least
/// [`TARGET_RECALL_AT_THRESHOLD`]. More rows means fewer false candidates.
pub fn choose_bands(permutations: usize, threshold: f64) -> (usize, usize) {
    let mut best = (permutations, 1);
    for rows in 1..=permutations {
        if permutations % rows != 0 {
            continue;
        }
        let bands = permutations / rows;
        if candidate_probability(threshold, bands, rows) >= TARGET_RECALL_AT_THRESHOLD {
            best = (bands, rows);
        }
    }
    best
}

/// Whether two signatures share at least one band.
pub fn is_candidate(a: &MinHashSignature, b: &MinHashSignature, bands: usize, rows: usize) -> bool {
    (0..bands).any(|band| {
        let range = band * rows..(band + 1) * rows;
        a.values[range.clone()] == b.values[range]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub dropped_id: String,
    pub kept_id: String,
    pub jaccard: f64,
}

#[derive(Debug, Clone, Default)]
pub struct DedupOutcome {
    pub kept: Vec<Document>,
    pub dropped: Vec<DropRecord>,
    /// LSH candidates rejected by exact verification.
    pub false_candidates: usize,
}

/// Keeps the first occurrence of every near-duplicate cluster, in stream
/// order. A document is dropped when its exact Jaccard similarity to some
/// earlier kept document is at least the threshold; LSH only proposes the
/// pairs to check.
pub fn dedup(docs: Vec<Document>, config: &DedupConfig) -> Result<DedupOutcome> {
    config.validate()?;
    let family = HashFamily::new(config.permutations, config.seed)?;

    let sets: Vec<HashSet<&str>> = docs.par_iter().map(|d| shingles(&d.text)).collect();
    let sigs: Vec<MinHashSignature> = docs
        .par_iter()
        .zip(&sets)
        .map(|(d, s)| signature_of_set(&d.doc_id, s, &family))
        .collect();

    let mut buckets: HashMap<(usize, u64), Vec<usize>> = HashMap::new();
    let mut keep = vec![false; docs.len()];
    let mut dropped = Vec::new();
    let mut false_candidates = 0;
    let mut candidates = Vec::new();

    for i in 0..docs.len() {
        let sig = &sigs[i];
        if sig.degenerate {
            keep[i] = true;
            continue;
        }
        let keys: Vec<(usize, u64)> = (0..config.bands)
            .map(|band| (band, band_key(&sig.values[band * config.rows..(band + 1) * config.rows])))
            .collect();

        candidates.clear();
        for key in &keys {
            if let Some(ids) = buckets.get(key) {
                candidates.extend_from_slice(ids);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();

        let mut best: Option<(usize, f64)> = None;
        for &c in &candidates {
            let j = jaccard(&sets[i], &sets[c]);
            if j >= config.threshold {
                if best.is_none_or(|(_, bj)| j > bj) {
                    best = Some((c, j));
                }
            } else {
                false_candidates += 1;
            }
        }

        match best {
            Some((c, j)) => dropped.push(DropRecord {
                dropped_id: docs[i].doc_id.clone(),
                kept_id: docs[c].doc_id.clone(),
                jaccard: j,
            }),
            None => {
                keep[i] = true;
                for key in keys {
                    buckets.entry(key).or_default().push(i);
                }
            }
        }
    }

    let kept = docs
        .into_iter()
        .zip(keep)
        .filter_map(|(d, k)| k.then_some(d))
        .collect();
    Ok(DedupOutcome {
        kept,
        dropped,
        false_candidates,
    })
}

fn band_key(values: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    xxh3_64(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> Document {
        Document::new(id, text)
    }

    #[test]
    fn default_banding() {
        assert_eq!(choose_bands(128, 0.6), (32, 4));
        let (b, r) = choose_bands(128, 0.6);
        assert!(candidate_probability(0.6, b, r) >= 0.95);
        assert_eq!(choose_bands(128, 1.0), (1, 128));
    }

    #[test]
    fn identical_docs_collapse() {
        let docs = (0..5).map(|i| doc(&format!("d{i}"), "same words in every document")).collect();
        let out = dedup(docs, &DedupConfig::default()).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].doc_id, "d0");
        assert_eq!(out.dropped.len(), 4);
        assert!(out.dropped.iter().all(|d| d.jaccard == 1.0 && d.kept_id == "d0"));
    }

    #[test]
    fn threshold_is_inclusive() {
        let docs = vec![doc("a", "a b c d"), doc("b", "a b c e")];
        let out = dedup(docs, &DedupConfig::default()).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.dropped[0].jaccard, 0.6);
    }

    #[test]
    fn disjoint_docs_kept() {
        let docs = vec![doc("a", "one two three"), doc("b", "four five six")];
        let out = dedup(docs, &DedupConfig::default()).unwrap();
        assert_eq!(out.kept.len(), 2);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn bad_banding_rejected() {
        let mut cfg = DedupConfig::default();
        cfg.bands = 10;
        assert!(matches!(
            dedup(vec![doc("a", "x")], &cfg),
            Err(Error::InvalidConfiguration(_))
        ));
        cfg = DedupConfig::default();
        cfg.threshold = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn whitespace_only_docs_are_kept() {
        let docs = vec![doc("a", " "), doc("b", "\n")];
        let out = dedup(docs, &DedupConfig::default()).unwrap();
        assert_eq!(out.kept.len(), 2);
    }
}
