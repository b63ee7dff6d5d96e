//! Vocabulary surgery: replace a base tokenizer's rarest tokens with tokens
//! learned on a new language, keeping the vocabulary size and every other
//! token id unchanged.
//!
//! Procedure:
//!
//! 1. Train a tokenizer of size `k` on the new language.
//! 2. Count the overlap `o`, the token strings both vocabularies share.
//! 3. Write the `k - o` new strings into the ids of the least frequent base
//!    tokens. All other ids keep their strings.
//! 4. Put the merge rules that build the new tokens in front of the base
//!    rules, in the new tokenizer's rank order.
//! 5. Report the replaced ids so their embedding rows can be reinitialized.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bpe::{BpeTrainer, Merge, TokenFrequencyTable, TokenId, Tokenizer};
use crate::error::{Error, Result};

/// Where "least frequent" comes from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum FrequencySource {
    /// Higher ids are rarer, as in GPT-2 vocabularies.
    #[default]
    IndexOrder,
    Table(TokenFrequencyTable),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurgeryPlan {
    /// Size of the new-language tokenizer, byte units included.
    pub k: usize,
    /// Ids that are never replaced. Always contains the specials.
    pub protected_ids: BTreeSet<TokenId>,
    pub frequency_source: FrequencySource,
}

impl SurgeryPlan {
    /// A plan protecting the base tokenizer's special tokens.
    pub fn new(base: &Tokenizer, k: usize, frequency_source: FrequencySource) -> Result<Self> {
        let plan = Self {
            k,
            protected_ids: base.specials().iter().map(|s| s.id).collect(),
            frequency_source,
        };
        plan.validate(base)?;
        Ok(plan)
    }

    pub fn protect(mut self, ids: impl IntoIterator<Item = TokenId>) -> Self {
        self.protected_ids.extend(ids);
        self
    }

    pub fn validate(&self, base: &Tokenizer) -> Result<()> {
        let v = base.vocab_size();
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if let Some(&bad) = self.protected_ids.iter().find(|&&id| id as usize >= v) {
            return Err(Error::InvalidArgument(format!(
                "protected id {bad} is outside the vocabulary of {v}"
            )));
        }
        let mut protected = self.protected_ids.clone();
        protected.extend(base.specials().iter().map(|s| s.id));
        if self.k > v - protected.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {} exceeds V - |protected| = {}",
                self.k,
                v - protected.len()
            )));
        }
        if let FrequencySource::Table(table) = &self.frequency_source {
            table.check_compatible(base)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub id: TokenId,
    pub old_token: String,
    pub new_token: String,
}

#[derive(Debug, Clone)]
pub struct SurgeryResult {
    pub adapted: Tokenizer,
    /// Vocabulary size of the trained new-language tokenizer. Equals the
    /// plan's `k` unless the corpus ran out of mergeable pairs.
    pub new_vocab_size: usize,
    /// Shared token strings, byte units included.
    pub overlap_count: usize,
    /// Shared token strings excluding the 256 byte units.
    pub overlap_learned: usize,
    /// Sorted by id.
    pub replaced: Vec<Replacement>,
    pub prepended_merges: Vec<Merge>,
    /// Replaced ids, ascending.
    pub reinit_manifest: Vec<TokenId>,
    /// Kept base tokens that lost every derivation because an ancestor was
    /// replaced. Only possible with a frequency table.
    pub orphaned: Vec<TokenId>,
}

impl SurgeryResult {
    fn unchanged(base: &Tokenizer, new_vocab_size: usize, overlap_count: usize) -> Self {
        Self {
            adapted: base.clone(),
            new_vocab_size,
            overlap_count,
            overlap_learned: overlap_count.saturating_sub(256),
            replaced: Vec::new(),
            prepended_merges: Vec::new(),
            reinit_manifest: Vec::new(),
            orphaned: Vec::new(),
        }
    }
}

/// Number of non-special token strings present in both tokenizers.
pub fn compute_overlap(base: &Tokenizer, new: &Tokenizer) -> Result<usize> {
    check_byte_maps(base, new)?;
    let base_tokens = base.regular_tokens();
    Ok(new
        .regular_tokens()
        .into_iter()
        .filter(|t| base_tokens.contains(t))
        .count())
}

fn check_byte_maps(base: &Tokenizer, new: &Tokenizer) -> Result<()> {
    if base.byte_map() != new.byte_map() {
        return Err(Error::IncompatibleTokenizer(
            "tokenizers use different byte unit maps".into(),
        ));
    }
    Ok(())
}

/// Picks `count` ids to overwrite. Byte units, specials and protected ids
/// are never chosen.
///
/// With index order the highest ids win. With a frequency table the lowest
/// counts win, ties going to the higher id. The result is ascending.
pub fn select_replacement_targets(
    base: &Tokenizer,
    plan: &SurgeryPlan,
    count: usize,
) -> Result<Vec<TokenId>> {
    let mut candidates: Vec<TokenId> = (0..base.vocab_size() as TokenId)
        .filter(|&id| {
            !plan.protected_ids.contains(&id) && !base.is_special(id) && !base.is_byte_unit(id)
        })
        .collect();
    if count > candidates.len() {
        return Err(Error::BudgetExceeded {
            required: count,
            available: candidates.len(),
        });
    }
    match &plan.frequency_source {
        FrequencySource::IndexOrder => {
            candidates.sort_unstable_by(|a, b| b.cmp(a));
        }
        FrequencySource::Table(table) => {
            table.check_compatible(base)?;
            candidates.sort_unstable_by(|&a, &b| {
                table.count(a).cmp(&table.count(b)).then(b.cmp(&a))
            });
        }
    }
    candidates.truncate(count);
    candidates.sort_unstable();
    Ok(candidates)
}

/// Full procedure: train a `plan.k` tokenizer on `corpus`, then splice it in.
pub fn replace_tokens<D: AsRef<[u8]>>(
    base: &Tokenizer,
    corpus: &[D],
    plan: &SurgeryPlan,
) -> Result<SurgeryResult> {
    plan.validate(base)?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("new-language corpus is empty".into()));
    }
    let mut trainer = BpeTrainer::new(plan.k).with_pretokenizer(base.pretokenizer());
    trainer.byte_map = base.byte_map().clone();
    let new = trainer.train(corpus.iter().map(AsRef::as_ref))?;
    replace_with_trained(base, &new, plan)
}

/// Splices an already trained new-language tokenizer into `base`.
pub fn replace_with_trained(
    base: &Tokenizer,
    new: &Tokenizer,
    plan: &SurgeryPlan,
) -> Result<SurgeryResult> {
    plan.validate(base)?;
    check_byte_maps(base, new)?;

    let k = new.vocab_size() - new.specials().len();
    if k < plan.k {
        warn!("new-language tokenizer has {k} tokens, fewer than k = {}", plan.k);
    }

    // New tokens in new-tokenizer id order, split into shared and inserted.
    let mut overlap_ids = Vec::new();
    let mut inserted: Vec<TokenId> = Vec::new();
    for id in 0..new.vocab_size() as TokenId {
        if new.is_special(id) {
            continue;
        }
        let s = new.token(id).expect("id in range");
        match base.token_id(s) {
            Some(b) if !base.is_special(b) => overlap_ids.push(b),
            _ => inserted.push(id),
        }
    }
    let overlap_count = overlap_ids.len();
    if inserted.is_empty() {
        warn!("every new-language token already exists in the base vocabulary; nothing replaced");
        return Ok(SurgeryResult::unchanged(base, k, overlap_count));
    }

    // Shared tokens stay where they are.
    let selection_plan = plan.clone().protect(overlap_ids.iter().copied());
    let targets = select_replacement_targets(base, &selection_plan, inserted.len())?;

    let mut vocab = base.vocab().to_vec();
    let mut replaced = Vec::with_capacity(targets.len());
    for (&target, &new_id) in targets.iter().zip(&inserted) {
        let new_token = new.token(new_id).expect("id in range").to_string();
        let old_token = std::mem::replace(&mut vocab[target as usize], new_token.clone());
        replaced.push(Replacement {
            id: target,
            old_token,
            new_token,
        });
    }

    let present: HashSet<&str> = vocab
        .iter()
        .enumerate()
        .filter(|(id, _)| !base.is_special(*id as TokenId))
        .map(|(_, s)| s.as_str())
        .collect();
    let retained: Vec<&Merge> = base
        .merges()
        .iter()
        .filter(|m| {
            present.contains(m.left.as_str())
                && present.contains(m.right.as_str())
                && present.contains(m.result().as_str())
        })
        .collect();

    // Shared tokens whose base derivation went away with a replaced token
    // get their new-tokenizer derivation as well.
    let mut needs_closure: Vec<TokenId> = inserted.clone();
    let base_derivable = derivable_set(&vocab, base, &retained);
    for id in 0..new.vocab_size() as TokenId {
        if new.is_special(id) || new.is_byte_unit(id) {
            continue;
        }
        let s = new.token(id).expect("id in range");
        if base.token_id(s).is_some() && !base_derivable.contains(s) {
            needs_closure.push(id);
        }
    }

    let ranks = merge_closure(new, &needs_closure);
    let prepended: Vec<Merge> = ranks.iter().map(|&r| new.merges()[r as usize].clone()).collect();
    let prepended_set: HashSet<&Merge> = prepended.iter().collect();
    let mut merges = prepended.clone();
    merges.extend(
        retained
            .into_iter()
            .filter(|m| !prepended_set.contains(m))
            .cloned(),
    );

    let adapted = Tokenizer::new(
        vocab,
        merges,
        base.specials().to_vec(),
        base.byte_map().clone(),
        base.pretokenizer(),
    )?;
    let inserted_ids: HashSet<TokenId> = targets.iter().copied().collect();
    let orphaned = adapted
        .underivable_tokens()
        .into_iter()
        .filter(|id| !inserted_ids.contains(id))
        .collect::<Vec<_>>();
    if !orphaned.is_empty() {
        warn!("{} kept tokens are no longer derivable by any merge", orphaned.len());
    }

    Ok(SurgeryResult {
        adapted,
        new_vocab_size: k,
        overlap_count,
        overlap_learned: overlap_ids.iter().filter(|&&id| !base.is_byte_unit(id)).count(),
        reinit_manifest: targets,
        replaced,
        prepended_merges: prepended,
        orphaned,
    })
}

/// Merge ranks (in `tok`) needed to build each of `ids`: the rules that fire
/// when the token's own bytes are encoded, plus its producing-rule chain.
fn merge_closure(tok: &Tokenizer, ids: &[TokenId]) -> Vec<u32> {
    let producing = tok.producing_ranks();
    let mut ranks = BTreeSet::new();
    let mut stack: Vec<TokenId> = ids.to_vec();
    let mut visited = HashSet::new();
    while let Some(id) = stack.pop() {
        if !visited.insert(id) {
            continue;
        }
        let bytes = tok.token_bytes(id).expect("id in range");
        ranks.extend(tok.fired_merges(bytes));
        if let Some(rank) = producing[id as usize] {
            ranks.insert(rank);
            let m = &tok.merges()[rank as usize];
            for operand in [&m.left, &m.right] {
                if let Some(op) = tok.token_id(operand) {
                    stack.push(op);
                }
            }
        }
    }
    // Fired rules may produce intermediate tokens; pull in their chains too.
    let mut frontier: Vec<u32> = ranks.iter().copied().collect();
    while let Some(rank) = frontier.pop() {
        let m = &tok.merges()[rank as usize];
        for operand in [&m.left, &m.right] {
            if let Some(op) = tok.token_id(operand) {
                if let Some(r) = producing[op as usize] {
                    if ranks.insert(r) {
                        frontier.push(r);
                    }
                }
            }
        }
    }
    ranks.into_iter().collect()
}

fn derivable_set<'a>(vocab: &'a [String], base: &Tokenizer, merges: &[&Merge]) -> HashSet<&'a str> {
    let map = base.byte_map();
    let mut derivable: HashSet<&str> = vocab
        .iter()
        .filter(|s| s.chars().count() == 1 && map.decode_units(s).is_some())
        .map(String::as_str)
        .collect();
    let index: HashMap<&str, &str> = vocab.iter().map(|s| (s.as_str(), s.as_str())).collect();
    loop {
        let mut changed = false;
        for m in merges {
            let result = m.result();
            if let Some(&r) = index.get(result.as_str()) {
                if !derivable.contains(r)
                    && derivable.contains(m.left.as_str())
                    && derivable.contains(m.right.as_str())
                {
                    derivable.insert(r);
                    changed = true;
                }
            }
        }
        if !changed {
            return derivable;
        }
    }
}

/// Cuts a trained tokenizer down to `size` entries (specials excluded),
/// giving what training with that size would have produced.
pub fn truncate_learned(tok: &Tokenizer, size: usize) -> Result<Tokenizer> {
    let n_special = tok.specials().len();
    let regular = tok.vocab_size() - n_special;
    if size < 256 {
        return Err(Error::InvalidArgument(format!(
            "cannot truncate below the 256 byte units (asked for {size})"
        )));
    }
    if tok
        .specials()
        .iter()
        .any(|s| (s.id as usize) < regular)
    {
        return Err(Error::InvalidArgument(
            "truncation requires specials at the end of the vocabulary".into(),
        ));
    }
    if size >= regular {
        return Ok(tok.clone());
    }

    let mut merges = Vec::new();
    if size > 256 {
        let last_kept = (size - 1) as TokenId;
        for m in tok.merges() {
            let result = tok.token_id(&m.result()).expect("validated merge");
            if result as usize >= size {
                break;
            }
            merges.push(m.clone());
            if result == last_kept {
                break;
            }
        }
    }
    let mut vocab: Vec<String> = tok.vocab()[..size].to_vec();
    let mut specials = tok.specials().to_vec();
    for s in &mut specials {
        s.id = vocab.len() as TokenId;
        vocab.push(s.content.clone());
    }
    Tokenizer::new(
        vocab,
        merges,
        specials,
        tok.byte_map().clone(),
        tok.pretokenizer(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReinitManifest {
    pub vocab_size: usize,
    pub replaced: Vec<Replacement>,
}

impl From<&SurgeryResult> for ReinitManifest {
    fn from(result: &SurgeryResult) -> Self {
        let mut replaced = result.replaced.clone();
        replaced.sort_by_key(|r| r.id);
        Self {
            vocab_size: result.adapted.vocab_size(),
            replaced,
        }
    }
}

/// Writes the ids whose embedding rows a trainer should re-randomize.
pub fn emit_reinit_manifest(result: &SurgeryResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let manifest = ReinitManifest::from(result);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_reinit_manifest(path: impl AsRef<Path>) -> Result<ReinitManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}
