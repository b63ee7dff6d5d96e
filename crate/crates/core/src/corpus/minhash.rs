//! MinHash signatures over whitespace-separated unigrams.
//!
//! For a shingle set `S` and hash family `h_1..h_P`, coordinate `i` of the
//! signature is `min_{x in S} h_i(x)`. Two sets agree on a coordinate with
//! probability equal to their Jaccard similarity.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};

pub const DEFAULT_PERMUTATIONS: usize = 128;
pub const MIN_PERMUTATIONS: usize = 16;

/// Seeds of the hash family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFamily {
    seeds: Vec<u64>,
}

impl HashFamily {
    /// `permutations` seeds derived from `seed` with splitmix64.
    pub fn new(permutations: usize, seed: u64) -> Result<Self> {
        if permutations < MIN_PERMUTATIONS {
            return Err(Error::InvalidConfiguration(format!(
                "at least {MIN_PERMUTATIONS} permutations required, got {permutations}"
            )));
        }
        let mut state = seed;
        let seeds = (0..permutations).map(|_| splitmix64(&mut state)).collect();
        Ok(Self { seeds })
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub doc_id: String,
    pub values: Vec<u64>,
    /// The document had no shingles; `values` are all `u64::MAX`.
    pub degenerate: bool,
}

impl MinHashSignature {
    /// Fraction of agreeing coordinates, an estimate of Jaccard similarity.
    pub fn similarity(&self, other: &Self) -> f64 {
        let same = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.values.len().max(1) as f64
    }
}

/// Distinct whitespace-separated unigrams of `text`.
pub fn shingles(text: &str) -> HashSet<&str> {
    text.split_whitespace().collect()
}

pub fn minhash_signature(doc_id: &str, text: &str, family: &HashFamily) -> MinHashSignature {
    signature_of_set(doc_id, &shingles(text), family)
}

pub fn signature_of_set(doc_id: &str, set: &HashSet<&str>, family: &HashFamily) -> MinHashSignature {
    let mut values = vec![u64::MAX; family.seeds.len()];
    for s in set {
        for (v, &seed) in values.iter_mut().zip(&family.seeds) {
            let h = xxh3_64_with_seed(s.as_bytes(), seed);
            if h < *v {
                *v = h;
            }
        }
    }
    MinHashSignature {
        doc_id: doc_id.to_string(),
        values,
        degenerate: set.is_empty(),
    }
}

/// Exact Jaccard similarity. Two empty sets have similarity 0.
pub fn jaccard(a: &HashSet<&str>, b: &HashSet<&str>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let inter = small.iter().filter(|x| large.contains(*x)).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}
