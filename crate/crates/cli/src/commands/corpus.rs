use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokgraft::corpus::{
    choose_bands, dedup as run_dedup, emit_mix_manifest, load_mix_manifest, mix as run_mix, read_jsonl,
    write_jsonl, write_jsonl_records, DedupConfig, MixComponent, MixSpec, MixUnit, DEFAULT_PERMUTATIONS,
    DEFAULT_THRESHOLD,
};

use super::tokenizer;
use crate::config::{input, parent, required, resolve, write_effective, UsageError};

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parent(path).join(format!("{stem}{suffix}"))
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DedupArgs {
    /// JSON-lines corpus.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Kept documents.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop records; defaults to `<out stem>.drops.jsonl`.
    #[arg(long)]
    pub drops_out: Option<PathBuf>,
    /// Jaccard similarity at or above which a document is dropped.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub permutations: Option<usize>,
    /// LSH bands; chosen from permutations and threshold when absent.
    #[arg(long)]
    pub bands: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn dedup(flags: DedupArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("dedup", flags, config)?;
    let path = required(&args.input, "input")?;
    let out = required(&args.out, "out")?;
    input(&path)?;
    let threshold = args.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let permutations = args.permutations.unwrap_or(DEFAULT_PERMUTATIONS);
    let (bands, rows) = match (args.bands, args.rows) {
        (Some(b), Some(r)) => (b, r),
        (Some(b), None) => (b, permutations / b.max(1)),
        (None, Some(r)) => (permutations / r.max(1), r),
        (None, None) => choose_bands(permutations, threshold),
    };
    let cfg = DedupConfig {
        threshold,
        permutations,
        bands,
        rows,
        seed: args.seed.unwrap_or(0),
    };
    cfg.validate()?;
    let docs = read_jsonl(&path)?;
    let total = docs.len();
    let outcome = run_dedup(docs, &cfg)?;
    let drops = args.drops_out.clone().unwrap_or_else(|| sibling(&out, ".drops.jsonl"));
    write_effective("dedup", &args, parent(&out))?;
    write_jsonl(&out, &outcome.kept)?;
    write_jsonl_records(&drops, &outcome.dropped)?;
    Ok(json!({
        "command": "dedup",
        "input_documents": total,
        "kept": outcome.kept.len(),
        "dropped": outcome.dropped.len(),
        "false_candidates": outcome.false_candidates,
        "config": cfg,
        "out": out,
        "drops": drops,
    }))
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixArgs {
    /// `NAME=PATH:WEIGHT`, repeated per component.
    #[arg(long = "component", num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<String>,
    /// Take the spec (components, seed, unit, total) from an earlier manifest.
    #[arg(long, conflicts_with = "components")]
    pub from_manifest: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub unit: Option<MixUnit>,
    /// Mixture size in `unit`; the largest feasible size when absent.
    #[arg(long)]
    pub total: Option<f64>,
    /// Tokenizer directory, required for `--unit tokens`.
    #[arg(long)]
    pub tokenizer: Option<PathBuf>,
    /// Mixed JSON-lines stream.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to `<out stem>.manifest.json`.
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

fn parse_component(s: &str) -> anyhow::Result<MixComponent> {
    let bad = || UsageError::new(format!("component {s:?} is not NAME=PATH:WEIGHT"));
    let (name, rest) = s.split_once('=').ok_or_else(bad)?;
    let (path, weight) = rest.rsplit_once(':').ok_or_else(bad)?;
    let weight: f64 = weight.parse().map_err(|_| bad())?;
    if name.is_empty() || path.is_empty() {
        return Err(bad().into());
    }
    Ok(MixComponent {
        name: name.to_string(),
        corpus: PathBuf::from(path),
        weight,
    })
}

pub fn mix(flags: MixArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("mix", flags, config)?;
    let out = required(&args.out, "out")?;
    let spec = match &args.from_manifest {
        Some(p) => {
            input(p)?;
            let mut spec = load_mix_manifest(p)?.spec;
            spec.seed = args.seed.unwrap_or(spec.seed);
            spec.unit = args.unit.unwrap_or(spec.unit);
            spec.total = args.total.or(spec.total);
            spec
        }
        None => {
            if args.components.is_empty() {
                return Err(UsageError::new("missing required --component (or --from-manifest)").into());
            }
            MixSpec {
                components: args.components.iter().map(|c| parse_component(c)).collect::<anyhow::Result<_>>()?,
                seed: args.seed.unwrap_or(0),
                unit: args.unit.unwrap_or(MixUnit::Samples),
                total: args.total,
            }
        }
    };
    spec.validate()?;
    for c in &spec.components {
        input(&c.corpus)?;
    }
    let tok = args.tokenizer.as_deref().map(tokenizer).transpose()?;
    let output = run_mix(&spec, spec.load_corpora()?, tok.as_ref())?;
    let manifest_path = args.manifest_out.clone().unwrap_or_else(|| sibling(&out, ".manifest.json"));
    write_effective("mix", &args, parent(&out))?;
    write_jsonl(&out, &output.stream)?;
    let manifest = emit_mix_manifest(&spec, &output, args.tokenizer.as_deref(), &manifest_path)?;
    Ok(json!({
        "command": "mix",
        "out": out,
        "manifest": manifest_path,
        "stream_sha256": manifest.stream_sha256,
        "report": manifest.report,
    }))
}
