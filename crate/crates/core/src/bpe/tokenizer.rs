use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bytes::ByteUnitMap;
use crate::error::{Error, Result};
use crate::pretokenize::PreTokenizer;

pub type TokenId = u32;

/// A merge rule, stored as the two operand token strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Merge {
    pub left: String,
    pub right: String,
}

impl Merge {
    pub fn new(left: impl Into<String>, right: impl Into<String>) -> Self {
        Self {
            left: left.into(),
            right: right.into(),
        }
    }

    pub fn result(&self) -> String {
        let mut s = String::with_capacity(self.left.len() + self.right.len());
        s.push_str(&self.left);
        s.push_str(&self.right);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpecialToken {
    pub content: String,
    pub id: TokenId,
}

#[derive(Debug, Clone, Copy)]
struct MergeEntry {
    rank: u32,
    result: TokenId,
}

/// An immutable byte-level BPE tokenizer.
///
/// Vocabulary entries are unit strings (see [`ByteUnitMap`]) except for
/// special tokens, whose entry is their literal content. Merge rules are
/// applied strictly in list order during encoding.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    vocab: Vec<String>,
    merges: Vec<Merge>,
    specials: Vec<SpecialToken>,
    byte_map: ByteUnitMap,
    pretokenizer: PreTokenizer,

    index: HashMap<String, TokenId>,
    byte_ids: [TokenId; 256],
    token_bytes: Vec<Vec<u8>>,
    is_special: Vec<bool>,
    merge_table: HashMap<(TokenId, TokenId), MergeEntry>,
    // Specials sorted longest first so that matching is leftmost-longest.
    special_order: Vec<usize>,
}

impl PartialEq for Tokenizer {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.merges == other.merges
            && self.specials == other.specials
            && self.byte_map == other.byte_map
            && self.pretokenizer == other.pretokenizer
    }
}

impl Eq for Tokenizer {}

impl Tokenizer {
    /// Assembles and validates a tokenizer.
    ///
    /// Requirements: no duplicate vocabulary strings, every byte unit present,
    /// special ids in range, every merge operand and result present as a
    /// non-special token, and no repeated merge rule.
    pub fn new(
        vocab: Vec<String>,
        merges: Vec<Merge>,
        specials: Vec<SpecialToken>,
        byte_map: ByteUnitMap,
        pretokenizer: PreTokenizer,
    ) -> Result<Self> {
        let v = vocab.len();
        if v > TokenId::MAX as usize {
            return Err(Error::Format(format!("vocabulary of {v} entries is too large")));
        }

        let mut index = HashMap::with_capacity(v);
        for (id, tok) in vocab.iter().enumerate() {
            if index.insert(tok.clone(), id as TokenId).is_some() {
                return Err(Error::Format(format!("duplicate token string {tok:?}")));
            }
        }

        let mut specials = specials;
        specials.sort_by_key(|s| s.id);
        let mut is_special = vec![false; v];
        for s in &specials {
            let slot = is_special.get_mut(s.id as usize).ok_or_else(|| {
                Error::Format(format!(
                    "special token {:?} has id {} outside vocabulary of {v}",
                    s.content, s.id
                ))
            })?;
            if *slot {
                return Err(Error::Format(format!("special id {} listed twice", s.id)));
            }
            if vocab[s.id as usize] != s.content {
                return Err(Error::Format(format!(
                    "special token {:?} does not match vocabulary entry {:?} at id {}",
                    s.content, vocab[s.id as usize], s.id
                )));
            }
            if s.content.is_empty() {
                return Err(Error::Format("empty special token".into()));
            }
            *slot = true;
        }

        let mut token_bytes = Vec::with_capacity(v);
        for (id, tok) in vocab.iter().enumerate() {
            if is_special[id] {
                token_bytes.push(tok.as_bytes().to_vec());
            } else {
                let bytes = byte_map.decode_units(tok).filter(|b| !b.is_empty()).ok_or_else(|| {
                    Error::Format(format!("token {tok:?} (id {id}) is not a byte-unit string"))
                })?;
                token_bytes.push(bytes);
            }
        }

        let mut byte_ids = [0 as TokenId; 256];
        for b in 0..=255u8 {
            let unit = byte_map.unit(b).to_string();
            match index.get(&unit) {
                Some(&id) if !is_special[id as usize] => byte_ids[b as usize] = id,
                _ => {
                    return Err(Error::Format(format!(
                        "vocabulary lacks the byte unit {unit:?} for byte {b:#04x}"
                    )))
                }
            }
        }

        let lookup = |s: &str| -> Option<TokenId> {
            index
                .get(s)
                .copied()
                .filter(|&id| !is_special[id as usize])
        };
        let mut merge_table = HashMap::with_capacity(merges.len());
        for (rank, m) in merges.iter().enumerate() {
            let (Some(l), Some(r)) = (lookup(&m.left), lookup(&m.right)) else {
                return Err(Error::Format(format!(
                    "merge {} {} (rank {rank}) references a token missing from the vocabulary",
                    m.left, m.right
                )));
            };
            let Some(result) = lookup(&m.result()) else {
                return Err(Error::Format(format!(
                    "merge {} {} (rank {rank}) produces {:?}, which is missing from the vocabulary",
                    m.left,
                    m.right,
                    m.result()
                )));
            };
            let entry = MergeEntry {
                rank: rank as u32,
                result,
            };
            if merge_table.insert((l, r), entry).is_some() {
                return Err(Error::Format(format!(
                    "merge {} {} appears more than once",
                    m.left, m.right
                )));
            }
        }

        let mut special_order: Vec<usize> = (0..specials.len()).collect();
        special_order.sort_by_key(|&i| Reverse(specials[i].content.len()));

        Ok(Self {
            vocab,
            merges,
            specials,
            byte_map,
            pretokenizer,
            index,
            byte_ids,
            token_bytes,
            is_special,
            merge_table,
            special_order,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn specials(&self) -> &[SpecialToken] {
        &self.specials
    }

    pub fn byte_map(&self) -> &ByteUnitMap {
        &self.byte_map
    }

    pub fn pretokenizer(&self) -> PreTokenizer {
        self.pretokenizer
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn is_special(&self, id: TokenId) -> bool {
        self.is_special.get(id as usize).copied().unwrap_or(false)
    }

    /// Ids of the 256 single-unit tokens, indexed by byte value.
    pub fn byte_ids(&self) -> &[TokenId; 256] {
        &self.byte_ids
    }

    pub fn is_byte_unit(&self, id: TokenId) -> bool {
        !self.is_special(id) && self.token_bytes.get(id as usize).is_some_and(|b| b.len() == 1)
    }

    /// Raw bytes a token decodes to.
    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.token_bytes.get(id as usize).map(Vec::as_slice)
    }

    /// Rank of the first merge rule producing each token, `None` for byte
    /// units, specials, and tokens no rule produces.
    pub fn producing_ranks(&self) -> Vec<Option<u32>> {
        let mut out = vec![None; self.vocab.len()];
        for entry in self.merge_table.values() {
            let slot = &mut out[entry.result as usize];
            if slot.is_none_or(|r| entry.rank < r) {
                *slot = Some(entry.rank);
            }
        }
        out
    }

    /// Non-special multi-unit tokens that cannot be built from byte units by
    /// the merge rules.
    pub fn underivable_tokens(&self) -> Vec<TokenId> {
        let mut derivable: Vec<bool> = (0..self.vocab.len())
            .map(|id| self.is_byte_unit(id as TokenId) || self.is_special[id])
            .collect();
        loop {
            let mut changed = false;
            for (&(l, r), entry) in &self.merge_table {
                if !derivable[entry.result as usize]
                    && derivable[l as usize]
                    && derivable[r as usize]
                {
                    derivable[entry.result as usize] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (0..self.vocab.len() as TokenId)
            .filter(|&id| !derivable[id as usize])
            .collect()
    }

    /// Encodes arbitrary bytes. Special tokens are matched first, then each
    /// remaining segment is pre-tokenized and merged.
    pub fn encode(&self, text: impl AsRef<[u8]>) -> Vec<TokenId> {
        let mut out = Vec::new();
        self.encode_into(text.as_ref(), &mut out);
        out
    }

    pub fn encode_into(&self, text: &[u8], out: &mut Vec<TokenId>) {
        let mut pieces = Vec::new();
        for segment in self.split_specials(text) {
            match segment {
                Segment::Special(id) => out.push(id),
                Segment::Text(bytes) => {
                    pieces.clear();
                    self.pretokenizer.split_into(bytes, &mut pieces);
                    for piece in &pieces {
                        self.encode_piece_into(piece, out);
                    }
                }
            }
        }
    }

    /// Number of tokens `encode` would produce.
    pub fn count_tokens(&self, text: impl AsRef<[u8]>) -> usize {
        self.encode(text).len()
    }

    /// Splits input into special-token matches and plain text.
    pub(crate) fn split_specials<'a>(&self, text: &'a [u8]) -> Vec<Segment<'a>> {
        if self.specials.is_empty() {
            return if text.is_empty() {
                Vec::new()
            } else {
                vec![Segment::Text(text)]
            };
        }
        let mut out = Vec::new();
        let mut start = 0;
        let mut pos = 0;
        while pos < text.len() {
            let hit = self.special_order.iter().find(|&&i| {
                let s = self.specials[i].content.as_bytes();
                text[pos..].starts_with(s)
            });
            match hit {
                Some(&i) => {
                    if start < pos {
                        out.push(Segment::Text(&text[start..pos]));
                    }
                    let s = &self.specials[i];
                    out.push(Segment::Special(s.id));
                    pos += s.content.len();
                    start = pos;
                }
                None => pos += 1,
            }
        }
        if start < text.len() {
            out.push(Segment::Text(&text[start..]));
        }
        out
    }

    /// Applies the merge rules to one pre-token.
    ///
    /// Rules fire in rank order. Each rule is applied to all of its
    /// occurrences left to right before any higher rank is considered, and a
    /// pair whose rank is lower than the rule just applied is never revisited.
    pub fn encode_piece_into(&self, piece: &[u8], out: &mut Vec<TokenId>) {
        self.merge_piece(piece, out, None);
    }

    /// Ranks of the merge rules that fire while encoding `text`, sorted and
    /// deduplicated.
    pub fn fired_merges(&self, text: impl AsRef<[u8]>) -> Vec<u32> {
        let mut fired = Vec::new();
        let mut out = Vec::new();
        let mut pieces = Vec::new();
        for segment in self.split_specials(text.as_ref()) {
            if let Segment::Text(bytes) = segment {
                pieces.clear();
                self.pretokenizer.split_into(bytes, &mut pieces);
                for piece in &pieces {
                    self.merge_piece(piece, &mut out, Some(&mut fired));
                }
            }
        }
        fired.sort_unstable();
        fired.dedup();
        fired
    }

    fn merge_piece(&self, piece: &[u8], out: &mut Vec<TokenId>, mut trace: Option<&mut Vec<u32>>) {
        let n = piece.len();
        if n == 0 {
            return;
        }
        if n == 1 {
            out.push(self.byte_ids[piece[0] as usize]);
            return;
        }

        let mut sym: Vec<TokenId> = piece.iter().map(|&b| self.byte_ids[b as usize]).collect();
        let mut next: Vec<usize> = (1..=n).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
        let mut alive = vec![true; n];

        // (rank, position, left, right)
        let mut heap: BinaryHeap<Reverse<(u32, usize, TokenId, TokenId)>> = BinaryHeap::new();
        for i in 0..n - 1 {
            if let Some(e) = self.merge_table.get(&(sym[i], sym[i + 1])) {
                heap.push(Reverse((e.rank, i, sym[i], sym[i + 1])));
            }
        }

        while let Some(Reverse((rank, pos, l, r))) = heap.pop() {
            let j = next[pos];
            if !alive[pos] || j >= n || sym[pos] != l || sym[j] != r {
                continue;
            }
            let merged = self.merge_table[&(l, r)].result;
            if let Some(t) = trace.as_deref_mut() {
                t.push(rank);
            }
            sym[pos] = merged;
            alive[j] = false;
            let after = next[j];
            next[pos] = after;
            if after < n {
                prev[after] = pos;
            }

            let before = prev[pos];
            if before < n {
                if let Some(e) = self.merge_table.get(&(sym[before], merged)) {
                    if e.rank > rank {
                        heap.push(Reverse((e.rank, before, sym[before], merged)));
                    }
                }
            }
            if after < n {
                if let Some(e) = self.merge_table.get(&(merged, sym[after])) {
                    if e.rank > rank {
                        heap.push(Reverse((e.rank, pos, merged, sym[after])));
                    }
                }
            }
        }

        let mut i = 0;
        while i < n {
            out.push(sym[i]);
            i = next[i];
        }
    }

    /// Encodes a single pre-token without running the pre-tokenizer.
    pub fn encode_piece(&self, piece: &[u8]) -> Vec<TokenId> {
        let mut out = Vec::new();
        self.encode_piece_into(piece, &mut out);
        out
    }

    /// Inverse of [`Self::encode`]. Fails on the first id that is not in the
    /// vocabulary.
    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (position, &id) in ids.iter().enumerate() {
            let bytes = self
                .token_bytes
                .get(id as usize)
                .ok_or(Error::InvalidId { position, id })?;
            out.extend_from_slice(bytes);
        }
        Ok(out)
    }

    /// Set of non-special token strings.
    pub(crate) fn regular_tokens(&self) -> HashSet<&str> {
        self.vocab
            .iter()
            .enumerate()
            .filter(|(id, _)| !self.is_special[*id])
            .map(|(_, s)| s.as_str())
            .collect()
    }
}

pub(crate) enum Segment<'a> {
    Special(TokenId),
    Text(&'a [u8]),
}
