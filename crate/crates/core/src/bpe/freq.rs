use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tokenizer::{TokenId, Tokenizer};
use crate::error::{Error, Result};

/// Per-token occurrence counts over a reference corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenFrequencyTable {
    pub corpus_id: String,
    /// Indexed by token id; ids that never occur have count 0.
    pub counts: Vec<u64>,
}

impl TokenFrequencyTable {
    pub fn count(&self, id: TokenId) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn check_compatible(&self, tokenizer: &Tokenizer) -> Result<()> {
        if self.counts.len() != tokenizer.vocab_size() {
            return Err(Error::IncompatibleTokenizer(format!(
                "frequency table covers {} ids but the tokenizer has {}",
                self.counts.len(),
                tokenizer.vocab_size()
            )));
        }
        Ok(())
    }
}

/// Counts how often each id appears when `corpus` is encoded.
pub fn count_token_frequencies<D>(
    tokenizer: &Tokenizer,
    corpus: &[D],
    corpus_id: impl Into<String>,
) -> Result<TokenFrequencyTable>
where
    D: AsRef<[u8]> + Sync,
{
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("frequency corpus is empty".into()));
    }
    let v = tokenizer.vocab_size();
    let counts = corpus
        .par_iter()
        .fold(
            || vec![0u64; v],
            |mut acc, doc| {
                for id in tokenizer.encode(doc.as_ref()) {
                    acc[id as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; v],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(TokenFrequencyTable {
        corpus_id: corpus_id.into(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train_bpe;

    #[test]
    fn byte_only_counts() {
        let t = train_bpe(["x"], 256, &[]).unwrap();
        let table = count_token_frequencies(&t, &["aa"], "test").unwrap();
        let a = t.token_id("a").unwrap();
        assert_eq!(table.count(a), 2);
        assert_eq!(table.total(), 2);
    }

    #[test]
    fn matches_direct_recount() {
        let docs = ["the cat sat on the mat", "a hat, a cat and the bat"];
        let t = train_bpe(docs, 270, &[]).unwrap();
        let table = count_token_frequencies(&t, &docs[..1], "one").unwrap();
        let mut expected = vec![0u64; t.vocab_size()];
        for id in t.encode(docs[0]) {
            expected[id as usize] += 1;
        }
        assert_eq!(table.counts, expected);
        assert_eq!(table.total() as usize, t.encode(docs[0]).len());
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let t = train_bpe(["x"], 256, &[]).unwrap();
        let empty: [&str; 0] = [];
        assert!(matches!(
            count_token_frequencies(&t, &empty, "none"),
            Err(Error::InvalidArgument(_))
        ));
    }
}
