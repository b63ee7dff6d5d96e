use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use log::warn;

use super::tokenizer::{Merge, SpecialToken, TokenId, Tokenizer};
use crate::bytes::ByteUnitMap;
use crate::error::{Error, Result};
use crate::pretokenize::PreTokenizer;

/// Pairs must be seen at least this often to be merged.
const MIN_PAIR_COUNT: u64 = 2;

/// Byte-level BPE trainer.
///
/// Among pairs with the highest count, the one whose left token has the
/// lowest id wins, then the lowest right id. Occurrences are counted at every
/// adjacent position, so `aaa` contributes two `(a, a)` pairs.
#[derive(Debug, Clone)]
pub struct BpeTrainer {
    pub vocab_size: usize,
    pub specials: Vec<String>,
    pub pretokenizer: PreTokenizer,
    pub byte_map: ByteUnitMap,
}

impl BpeTrainer {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            specials: Vec::new(),
            pretokenizer: PreTokenizer::Gpt2,
            byte_map: ByteUnitMap::gpt2(),
        }
    }

    pub fn with_specials<S: Into<String>>(mut self, specials: impl IntoIterator<Item = S>) -> Self {
        self.specials = specials.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_pretokenizer(mut self, pretokenizer: PreTokenizer) -> Self {
        self.pretokenizer = pretokenizer;
        self
    }

    /// Trains on `corpus`. Special tokens occurring in the text are cut out
    /// before counting.
    pub fn train<I>(&self, corpus: I) -> Result<Tokenizer>
    where
        I: IntoIterator,
        I::Item: AsRef<[u8]>,
    {
        let floor = 256 + self.specials.len();
        if self.vocab_size < floor {
            return Err(Error::InvalidArgument(format!(
                "vocab_size {} is below 256 byte units + {} specials",
                self.vocab_size,
                self.specials.len()
            )));
        }

        let scaffold = self.scaffold()?;
        let mut counts: HashMap<Vec<u8>, u64> = HashMap::new();
        let mut docs = 0usize;
        for doc in corpus {
            docs += 1;
            let mut pieces = Vec::new();
            for segment in scaffold.split_specials(doc.as_ref()) {
                if let super::tokenizer::Segment::Text(bytes) = segment {
                    pieces.clear();
                    self.pretokenizer.split_into(bytes, &mut pieces);
                    for p in &pieces {
                        *counts.entry(p.to_vec()).or_default() += 1;
                    }
                }
            }
        }
        if docs == 0 {
            return Err(Error::InvalidArgument("training corpus is empty".into()));
        }

        let words = WordCounts::from_counts(counts);
        self.train_words(words)
    }

    /// Trains from pre-counted words (pre-token bytes with frequencies).
    pub fn train_from_word_counts(&self, counts: HashMap<Vec<u8>, u64>) -> Result<Tokenizer> {
        let floor = 256 + self.specials.len();
        if self.vocab_size < floor {
            return Err(Error::InvalidArgument(format!(
                "vocab_size {} is below 256 byte units + {} specials",
                self.vocab_size,
                self.specials.len()
            )));
        }
        self.train_words(WordCounts::from_counts(counts))
    }

    fn scaffold(&self) -> Result<Tokenizer> {
        let (vocab, specials) = self.assemble(Vec::new())?;
        Tokenizer::new(
            vocab,
            Vec::new(),
            specials,
            self.byte_map.clone(),
            self.pretokenizer,
        )
    }

    fn assemble(&self, learned: Vec<String>) -> Result<(Vec<String>, Vec<SpecialToken>)> {
        let mut vocab: Vec<String> = self
            .byte_map
            .vocab_order()
            .into_iter()
            .map(|b| self.byte_map.unit(b).to_string())
            .collect();
        vocab.extend(learned);
        let mut specials = Vec::with_capacity(self.specials.len());
        for s in &self.specials {
            if vocab.contains(s) {
                return Err(Error::InvalidArgument(format!(
                    "special token {s:?} collides with a vocabulary entry"
                )));
            }
            specials.push(SpecialToken {
                content: s.clone(),
                id: vocab.len() as TokenId,
            });
            vocab.push(s.clone());
        }
        Ok((vocab, specials))
    }

    fn train_words(&self, mut words: WordCounts) -> Result<Tokenizer> {
        let budget = self.vocab_size - 256 - self.specials.len();
        let map = &self.byte_map;

        // Ids are assigned exactly as in the final vocabulary.
        let mut strings: Vec<String> = map
            .vocab_order()
            .into_iter()
            .map(|b| map.unit(b).to_string())
            .collect();
        let mut id_of: HashMap<String, TokenId> = strings
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as TokenId))
            .collect();
        let mut byte_ids = [0 as TokenId; 256];
        for (id, b) in map.vocab_order().into_iter().enumerate() {
            byte_ids[b as usize] = id as TokenId;
        }
        words.assign_ids(&byte_ids);

        let mut pair_counts: HashMap<(TokenId, TokenId), u64> = HashMap::new();
        let mut where_found: HashMap<(TokenId, TokenId), Vec<usize>> = HashMap::new();
        for (w, (syms, freq)) in words.entries.iter().enumerate() {
            for pair in syms.windows(2) {
                let p = (pair[0], pair[1]);
                *pair_counts.entry(p).or_default() += freq;
                where_found.entry(p).or_default().push(w);
            }
        }
        let mut heap: BinaryHeap<(u64, Reverse<TokenId>, Reverse<TokenId>)> = pair_counts
            .iter()
            .map(|(&(l, r), &c)| (c, Reverse(l), Reverse(r)))
            .collect();

        let mut merges = Vec::new();
        let mut learned = 0usize;
        while learned < budget {
            let Some((count, Reverse(l), Reverse(r))) = heap.pop() else {
                break;
            };
            if pair_counts.get(&(l, r)).copied().unwrap_or(0) != count {
                continue;
            }
            if count < MIN_PAIR_COUNT {
                break;
            }

            let merged_str = format!("{}{}", strings[l as usize], strings[r as usize]);
            let merged = match id_of.get(&merged_str) {
                Some(&id) => id,
                None => {
                    let id = strings.len() as TokenId;
                    id_of.insert(merged_str.clone(), id);
                    strings.push(merged_str);
                    learned += 1;
                    id
                }
            };
            merges.push(Merge::new(
                strings[l as usize].clone(),
                strings[r as usize].clone(),
            ));

            let mut affected = where_found.remove(&(l, r)).unwrap_or_default();
            affected.sort_unstable();
            affected.dedup();
            let mut delta: BTreeMap<(TokenId, TokenId), i64> = BTreeMap::new();
            for w in affected {
                let (syms, freq) = &mut words.entries[w];
                let freq = *freq as i64;
                if !syms.windows(2).any(|p| p[0] == l && p[1] == r) {
                    continue;
                }
                for p in syms.windows(2) {
                    *delta.entry((p[0], p[1])).or_default() -= freq;
                }
                merge_in_place(syms, l, r, merged);
                for p in syms.windows(2) {
                    let pair = (p[0], p[1]);
                    *delta.entry(pair).or_default() += freq;
                    if pair.0 == merged || pair.1 == merged {
                        where_found.entry(pair).or_default().push(w);
                    }
                }
            }
            for (pair, d) in delta {
                if d == 0 {
                    continue;
                }
                let c = pair_counts.entry(pair).or_default();
                *c = (*c as i64 + d) as u64;
                let c = *c;
                if c == 0 {
                    pair_counts.remove(&pair);
                } else {
                    heap.push((c, Reverse(pair.0), Reverse(pair.1)));
                }
            }
        }

        if learned < budget {
            warn!(
                "corpus exhausted after {learned} of {budget} merges; vocabulary has {} entries instead of {}",
                256 + learned + self.specials.len(),
                self.vocab_size
            );
        }

        let learned_strings = strings.split_off(256);
        let (vocab, specials) = self.assemble(learned_strings)?;
        Tokenizer::new(vocab, merges, specials, self.byte_map.clone(), self.pretokenizer)
    }
}

/// Convenience wrapper around [`BpeTrainer`] with the GPT-2 pre-tokenizer.
pub fn train_bpe<I>(corpus: I, vocab_size: usize, specials: &[String]) -> Result<Tokenizer>
where
    I: IntoIterator,
    I::Item: AsRef<[u8]>,
{
    BpeTrainer::new(vocab_size)
        .with_specials(specials.iter().cloned())
        .train(corpus)
}

/// Left-to-right, non-overlapping replacement of `(l, r)` by `merged`.
pub(crate) fn merge_in_place(syms: &mut Vec<TokenId>, l: TokenId, r: TokenId, merged: TokenId) {
    let mut out = 0;
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == l && syms[i + 1] == r {
            syms[out] = merged;
            i += 2;
        } else {
            syms[out] = syms[i];
            i += 1;
        }
        out += 1;
    }
    syms.truncate(out);
}

struct WordCounts {
    raw: Vec<Vec<u8>>,
    entries: Vec<(Vec<TokenId>, u64)>,
}

impl WordCounts {
    fn from_counts(counts: HashMap<Vec<u8>, u64>) -> Self {
        let mut sorted: Vec<(Vec<u8>, u64)> = counts.into_iter().collect();
        sorted.sort_unstable();
        let (raw, freqs): (Vec<_>, Vec<_>) = sorted.into_iter().unzip();
        let entries = freqs.into_iter().map(|f| (Vec::new(), f)).collect();
        Self { raw, entries }
    }

    fn assign_ids(&mut self, byte_ids: &[TokenId; 256]) {
        for (bytes, (syms, _)) in self.raw.iter().zip(self.entries.iter_mut()) {
            *syms = bytes.iter().map(|&b| byte_ids[b as usize]).collect();
        }
    }
}
