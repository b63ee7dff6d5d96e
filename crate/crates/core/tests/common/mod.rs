//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokgraft::bpe::Merge;
use tokgraft::fertility::Treebank;
use tokgraft::{ByteUnitMap, PreTokenizer};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Quadratic textbook BPE: recount every adjacent pair after each merge, take
/// the most frequent (ties to the lowest left id, then lowest right id) and
/// rewrite every word left to right.
pub fn naive_train(corpus: &[String], vocab_size: usize, pretokenizer: PreTokenizer) -> Vec<Merge> {
    let map = ByteUnitMap::gpt2();
    let mut strings: Vec<String> = map.vocab_order().into_iter().map(|b| map.unit(b).to_string()).collect();
    let mut id_of: HashMap<String, u32> = strings.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();

    let mut freq: HashMap<Vec<u8>, u64> = HashMap::new();
    for doc in corpus {
        for piece in pretokenizer.split(doc.as_bytes()) {
            *freq.entry(piece.to_vec()).or_default() += 1;
        }
    }
    let mut words: Vec<(Vec<u32>, u64)> = freq
        .into_iter()
        .map(|(bytes, f)| {
            let ids = bytes.iter().map(|&b| id_of[&map.unit(b).to_string()]).collect();
            (ids, f)
        })
        .collect();

    let mut merges = Vec::new();
    while strings.len() < vocab_size {
        let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
        for (ids, f) in &words {
            for w in ids.windows(2) {
                *counts.entry((w[0], w[1])).or_default() += f;
            }
        }
        let Some((&(l, r), &c)) = counts
            .iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then(pb.cmp(pa)))
        else {
            break;
        };
        if c < 2 {
            break;
        }
        let s = format!("{}{}", strings[l as usize], strings[r as usize]);
        let new_id = *id_of.entry(s.clone()).or_insert_with(|| {
            strings.push(s);
            strings.len() as u32 - 1
        });
        merges.push(Merge::new(strings[l as usize].clone(), strings[r as usize].clone()));
        for (ids, _) in &mut words {
            let mut out = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == l && ids[i + 1] == r {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(ids[i]);
                    i += 1;
                }
            }
            *ids = out;
        }
    }
    merges
}

/// Applies every merge rule in file order to each pre-token, rewriting all
/// occurrences left to right before moving to the next rule. Ignores specials.
pub fn naive_encode(tok: &tokgraft::Tokenizer, text: &[u8]) -> Vec<u32> {
    let map = tok.byte_map();
    let mut out = Vec::new();
    for piece in tok.pretokenizer().split(text) {
        let mut syms: Vec<String> = piece.iter().map(|&b| map.unit(b).to_string()).collect();
        for m in tok.merges() {
            let mut next = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == m.left && syms[i + 1] == m.right {
                    next.push(m.result());
                    i += 2;
                } else {
                    next.push(syms[i].clone());
                    i += 1;
                }
            }
            syms = next;
        }
        out.extend(syms.iter().map(|s| tok.token_id(s).unwrap()));
    }
    out
}

/// Random text over `alphabet` with occasional spaces.
pub fn random_corpus(rng: &mut ChaCha8Rng, alphabet: &[char], len: usize) -> String {
    (0..len)
        .map(|_| {
            if rng.random_bool(0.15) {
                ' '
            } else {
                *alphabet.choose(rng).unwrap()
            }
        })
        .collect()
}

/// Random bytes, a third of them from a small ASCII set so merges form, the
/// rest arbitrary (mostly invalid UTF-8).
pub fn random_bytes(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<u8> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| match rng.random_range(0..3) {
            0 => b"ab cde"[rng.random_range(0..6)],
            1 => rng.random_range(0x80..=0xff),
            _ => rng.random(),
        })
        .collect()
}

/// Random valid UTF-8 mixing ASCII, accented Latin, CJK and emoji.
pub fn random_text(rng: &mut ChaCha8Rng, max_chars: usize) -> String {
    let len = rng.random_range(0..=max_chars);
    (0..len)
        .map(|_| match rng.random_range(0..4) {
            0 => *[' ', 'a', 'b', 'é', '\n', '\'', '7'].choose(rng).unwrap(),
            1 => char::from_u32(rng.random_range(0x20..0x250)).unwrap(),
            2 => char::from_u32(rng.random_range(0x4e00..0x9fff)).unwrap(),
            _ => rng.random::<char>(),
        })
        .collect()
}

/// A synthetic language: a Zipf-weighted lexicon built from its own
/// syllable inventory.
pub struct Language {
    pub name: &'static str,
    lexicon: Vec<String>,
    cumulative: Vec<f64>,
}

impl Language {
    pub fn new(name: &'static str, onsets: &[&str], nuclei: &[&str], codas: &[&str], words: usize, seed: u64) -> Self {
        let mut rng = rng(seed);
        let mut lexicon = Vec::with_capacity(words);
        let mut seen = std::collections::HashSet::new();
        while lexicon.len() < words {
            let syllables = 1 + rng.random_range(0..4usize).min(rng.random_range(0..4));
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(onsets.choose(&mut rng).unwrap());
                w.push_str(nuclei.choose(&mut rng).unwrap());
                if rng.random_bool(0.4) {
                    w.push_str(codas.choose(&mut rng).unwrap());
                }
            }
            if seen.insert(w.clone()) {
                lexicon.push(w);
            }
        }
        let mut acc = 0.0;
        let cumulative = (1..=words)
            .map(|r| {
                acc += 1.0 / r as f64;
                acc
            })
            .collect();
        Self { name, lexicon, cumulative }
    }

    /// English-like: ASCII letters only.
    pub fn a(seed: u64) -> Self {
        Self::new(
            "lang_a",
            &["b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "w", "th", "st", "ch", "sh"],
            &["a", "e", "i", "o", "u", "ea", "ou"],
            &["n", "r", "s", "t", "ng", "ld"],
            3000,
            seed,
        )
    }

    /// Hungarian-like: accented vowels and digraphs, little overlap with A.
    pub fn b(seed: u64) -> Self {
        Self::new(
            "lang_b",
            &["gy", "ny", "sz", "zs", "cs", "k", "v", "j", "z", "ty", "ly"],
            &["á", "é", "ő", "ű", "ö", "ü", "í", "ó"],
            &["k", "zs", "gy", "j", "v"],
            3000,
            seed,
        )
    }

    pub fn word(&self, rng: &mut ChaCha8Rng) -> &str {
        let x = rng.random_range(0.0..*self.cumulative.last().unwrap());
        let i = self.cumulative.partition_point(|&c| c < x);
        &self.lexicon[i.min(self.lexicon.len() - 1)]
    }

    pub fn sentence(&self, rng: &mut ChaCha8Rng) -> Vec<&str> {
        let n = rng.random_range(5..15);
        (0..n).map(|_| self.word(rng)).collect()
    }

    /// Documents of a few sentences each.
    pub fn corpus(&self, docs: usize, seed: u64) -> Vec<String> {
        let mut rng = rng(seed);
        (0..docs)
            .map(|_| {
                let n = rng.random_range(2..6);
                (0..n)
                    .map(|_| self.sentence(&mut rng).join(" ") + ".")
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    /// A held-out treebank as CoNLL-U text.
    pub fn conllu(&self, sentences: usize, seed: u64) -> String {
        let mut rng = rng(seed);
        let mut out = String::new();
        for s in 0..sentences {
            out.push_str(&format!("# sent_id = {s}\n"));
            for (i, w) in self.sentence(&mut rng).iter().enumerate() {
                out.push_str(&format!("{}\t{w}\t{w}\tX\t_\t_\t0\tdep\t_\t_\n", i + 1));
            }
            out.push('\n');
        }
        out
    }

    pub fn treebank(&self, sentences: usize, seed: u64) -> Treebank {
        let path = std::path::PathBuf::from(format!("{}_test.conllu", self.name));
        let words = tokgraft::fertility::parse_conllu_str(&path, &self.conllu(sentences, seed)).unwrap();
        Treebank::new(words, self.name, self.name).unwrap()
    }
}

/// Two unrelated languages at random sizes, for surgery fixtures.
pub fn random_pair(rng: &mut ChaCha8Rng) -> (Vec<String>, Vec<String>) {
    let a_alpha: Vec<char> = "abcdefgh".chars().collect();
    let b_alpha: Vec<char> = "efghijklmnőé".chars().collect();
    let docs = rng.random_range(3..8);
    let a = (0..docs).map(|_| random_corpus(rng, &a_alpha, 400)).collect();
    let b = (0..docs).map(|_| random_corpus(rng, &b_alpha, 400)).collect();
    (a, b)
}

pub fn next_seed(rng: &mut ChaCha8Rng) -> u64 {
    rng.next_u64()
}
