//! Seeded, weighted, sample-level interleaving of several corpora.
//!
//! Every component gets a quota `weight * total` in the chosen unit. At each
//! step one component is drawn with probability proportional to its unmet
//! quota and contributes its next document; each component's documents come
//! out in a seeded shuffled order. Drawing by unmet quota keeps the achieved
//! ratio close to the target over the whole stream, not only in
//! expectation.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::document::{read_jsonl, Document};
use crate::bpe::Tokenizer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixUnit {
    Tokens,
    Samples,
}

impl std::fmt::Display for MixUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MixUnit::Tokens => "tokens",
            MixUnit::Samples => "samples",
        })
    }
}

impl std::str::FromStr for MixUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tokens" => Ok(MixUnit::Tokens),
            "samples" => Ok(MixUnit::Samples),
            other => Err(Error::InvalidArgument(format!("unknown mix unit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixComponent {
    pub name: String,
    /// JSON-lines corpus file.
    pub corpus: PathBuf,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub components: Vec<MixComponent>,
    pub seed: u64,
    pub unit: MixUnit,
    /// Size of the mixture in `unit`. When absent, the largest size every
    /// component can satisfy without running out.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidArgument("mix has no components".into()));
        }
        for c in &self.components {
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::InvalidArgument(format!(
                    "weight of {} is {}, expected a value in [0, 1]",
                    c.name, c.weight
                )));
            }
        }
        let sum: f64 = self.components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("weights sum to {sum}, not 1")));
        }
        if !self.components.iter().any(|c| c.weight > 0.0) {
            return Err(Error::InvalidArgument("no component has positive weight".into()));
        }
        if let Some(total) = self.total {
            if !(total > 0.0) {
                return Err(Error::InvalidArgument(format!("total must be positive, got {total}")));
            }
        }
        Ok(())
    }

    /// Reads every component corpus in order.
    pub fn load_corpora(&self) -> Result<Vec<Vec<Document>>> {
        self.components.iter().map(|c| read_jsonl(&c.corpus)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub name: String,
    pub target_ratio: f64,
    pub achieved_ratio: f64,
    pub documents: usize,
    /// Amount contributed in the mix unit.
    pub units: f64,
    /// Token count, when a tokenizer was supplied.
    pub tokens: Option<u64>,
    pub exhausted_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    pub unit: MixUnit,
    pub total_units: f64,
    pub total_documents: usize,
    pub components: Vec<ComponentReport>,
}

#[derive(Debug, Clone)]
pub struct MixOutput {
    pub stream: Vec<Document>,
    pub report: MixReport,
}

/// Interleaves `corpora` (one per spec component, in order).
pub fn mix(spec: &MixSpec, corpora: Vec<Vec<Document>>, tokenizer: Option<&Tokenizer>) -> Result<MixOutput> {
    spec.validate()?;
    if corpora.len() != spec.components.len() {
        return Err(Error::InvalidArgument(format!(
            "{} corpora given for {} components",
            corpora.len(),
            spec.components.len()
        )));
    }
    if spec.unit == MixUnit::Tokens && tokenizer.is_none() {
        return Err(Error::InvalidArgument("mixing by tokens requires a tokenizer".into()));
    }
    if corpora.iter().all(Vec::is_empty) {
        return Err(Error::InvalidArgument("every mix component is empty".into()));
    }

    let token_counts: Vec<Option<Vec<u64>>> = corpora
        .iter()
        .map(|docs| {
            tokenizer.map(|t| {
                docs.par_iter()
                    .map(|d| t.encode(d.text.as_bytes()).len() as u64)
                    .collect()
            })
        })
        .collect();
    let units: Vec<Vec<f64>> = corpora
        .iter()
        .zip(&token_counts)
        .map(|(docs, tokens)| match spec.unit {
            MixUnit::Samples => vec![1.0; docs.len()],
            MixUnit::Tokens => tokens
                .as_ref()
                .expect("tokenizer present")
                .iter()
                .map(|&n| n as f64)
                .collect(),
        })
        .collect();

    let available: Vec<f64> = units.iter().map(|u| u.iter().sum()).collect();
    let total = match spec.total {
        Some(t) => t,
        None => spec
            .components
            .iter()
            .zip(&available)
            .filter(|(c, _)| c.weight > 0.0)
            .map(|(c, &a)| a / c.weight)
            .fold(f64::INFINITY, f64::min),
    };
    let targets: Vec<f64> = spec.components.iter().map(|c| c.weight * total).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut orders: Vec<Vec<usize>> = corpora
        .iter()
        .map(|docs| {
            let mut order: Vec<usize> = (0..docs.len()).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();
    for order in &mut orders {
        order.reverse(); // pop from the back
    }

    let n = corpora.len();
    let mut achieved = vec![0.0f64; n];
    let mut taken: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut picks: Vec<(usize, usize)> = Vec::new();
    let tolerance = |i: usize| 1e-9 * targets[i].max(1.0);
    loop {
        let remaining: Vec<f64> = (0..n)
            .map(|i| {
                let r = targets[i] - achieved[i];
                if orders[i].is_empty() || r <= tolerance(i) {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        let sum: f64 = remaining.iter().sum();
        if sum <= 0.0 {
            break;
        }
        let mut x = rng.random::<f64>() * sum;
        let mut pick = n - 1;
        for (i, &r) in remaining.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            pick = i;
            if x < r {
                break;
            }
            x -= r;
        }
        let doc = orders[pick].pop().expect("picked component has documents");
        achieved[pick] += units[pick][doc];
        taken[pick].push(doc);
        picks.push((pick, doc));
    }

    let total_units: f64 = achieved.iter().sum();
    let mut components = Vec::with_capacity(n);
    for (i, c) in spec.components.iter().enumerate() {
        let exhausted_early = targets[i] - achieved[i] > tolerance(i);
        if exhausted_early {
            warn!(
                "component {} ran out after {} of {} target units",
                c.name, achieved[i], targets[i]
            );
        }
        components.push(ComponentReport {
            name: c.name.clone(),
            target_ratio: c.weight,
            achieved_ratio: if total_units > 0.0 { achieved[i] / total_units } else { 0.0 },
            documents: taken[i].len(),
            units: achieved[i],
            tokens: token_counts[i]
                .as_ref()
                .map(|counts| taken[i].iter().map(|&d| counts[d]).sum()),
            exhausted_early,
        });
    }

    let mut slots: Vec<Vec<Option<Document>>> = corpora
        .into_iter()
        .map(|docs| docs.into_iter().map(Some).collect())
        .collect();
    let stream: Vec<Document> = picks
        .into_iter()
        .map(|(c, d)| slots[c][d].take().expect("each document is drawn once"))
        .collect();

    Ok(MixOutput {
        report: MixReport {
            unit: spec.unit,
            total_units,
            total_documents: stream.len(),
            components,
        },
        stream,
    })
}

pub const MIX_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixManifest {
    pub format_version: u32,
    pub spec: MixSpec,
    /// Tokenizer directory used for token counting, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokenizer: Option<PathBuf>,
    pub report: MixReport,
    /// SHA-256 of the JSON-lines stream.
    pub stream_sha256: String,
}

/// SHA-256 of the stream as written by [`crate::corpus::write_jsonl`].
pub fn stream_digest(stream: &[Document]) -> String {
    let mut hasher = Sha256::new();
    for d in stream {
        hasher.update(serde_json::to_vec(d).expect("documents serialize"));
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

pub fn emit_mix_manifest(
    spec: &MixSpec,
    output: &MixOutput,
    tokenizer: Option<&Path>,
    path: impl AsRef<Path>,
) -> Result<MixManifest> {
    let path = path.as_ref();
    let manifest = MixManifest {
        format_version: MIX_MANIFEST_VERSION,
        spec: spec.clone(),
        tokenizer: tokenizer.map(Path::to_path_buf),
        report: output.report.clone(),
        stream_sha256: stream_digest(&output.stream),
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(manifest)
}

pub fn load_mix_manifest(path: impl AsRef<Path>) -> Result<MixManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}
