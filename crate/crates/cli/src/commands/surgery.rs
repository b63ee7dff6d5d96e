use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokgraft::bpe::save_tokenizer;
use tokgraft::surgery::{emit_reinit_manifest, replace_tokens, FrequencySource, SurgeryPlan};

use super::{frequency_table, read_texts, tokenizer};
use crate::config::{required, resolve, write_effective, UsageError};

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryArgs {
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// New-language corpus.
    #[arg(long, num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corpus: Vec<PathBuf>,
    /// Size of the new-language tokenizer, byte units included.
    #[arg(long)]
    pub k: Option<usize>,
    /// Token frequency table of the base tokenizer; index order when absent.
    #[arg(long)]
    pub freq: Option<PathBuf>,
    /// Additional ids that must not be replaced.
    #[arg(long = "protect", num_args = 1..)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protect: Vec<u32>,
    /// Output directory for the adapted tokenizer.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reinitialization manifest; defaults to `<out>/reinit_manifest.json`.
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

pub fn surgery(flags: SurgeryArgs, config: Option<&Path>) -> anyhow::Result<Value> {
    let args = resolve("surgery", flags, config)?;
    let base = tokenizer(&required(&args.base, "base")?)?;
    let k = required(&args.k, "k")?;
    let out = required(&args.out, "out")?;
    if args.corpus.is_empty() {
        return Err(UsageError::new("missing required --corpus").into());
    }
    let source = match &args.freq {
        Some(p) => FrequencySource::Table(frequency_table(p)?),
        None => FrequencySource::IndexOrder,
    };
    let plan = SurgeryPlan::new(&base, k, source)?.protect(args.protect.iter().copied());
    plan.validate(&base)?;
    let corpus = read_texts(&args.corpus)?;
    let result = replace_tokens(&base, &corpus, &plan)?;

    save_tokenizer(&result.adapted, &out)?;
    let manifest = args.manifest_out.clone().unwrap_or_else(|| out.join("reinit_manifest.json"));
    emit_reinit_manifest(&result, &manifest)?;
    write_effective("surgery", &args, &out)?;
    let v = result.adapted.vocab_size();
    Ok(json!({
        "command": "surgery",
        "k": k,
        "new_vocab_size": result.new_vocab_size,
        "o": result.overlap_count,
        "overlap_learned": result.overlap_learned,
        "replaced": result.replaced.len(),
        "replaced_fraction": result.replaced.len() as f64 / v as f64,
        "prepended_merges": result.prepended_merges.len(),
        "orphaned": result.orphaned,
        "vocab_size": v,
        "out": out,
        "manifest": manifest,
    }))
}
