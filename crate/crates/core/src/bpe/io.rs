//! GPT-2 style `vocab.json` / `merges.txt` files.
//!
//! A tokenizer directory holds three files:
//!
//! * `vocab.json`: one JSON object mapping token string to id, written in id
//!   order on a single line.
//! * `merges.txt`: a `#version: 0.2` header followed by one `left right`
//!   rule per line; line order is merge rank.
//! * `tokenizer_config.json`: pre-tokenizer id, byte unit table and the
//!   special tokens. Optional on load; without it specials are inferred.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use super::tokenizer::{Merge, SpecialToken, TokenId, Tokenizer};
use crate::bytes::ByteUnitMap;
use crate::error::{Error, Result};
use crate::pretokenize::PreTokenizer;

pub const VOCAB_FILE: &str = "vocab.json";
pub const MERGES_FILE: &str = "merges.txt";
pub const CONFIG_FILE: &str = "tokenizer_config.json";
const MERGES_HEADER: &str = "#version: 0.2";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TokenizerConfig {
    pretokenizer: PreTokenizer,
    byte_units: String,
    specials: Vec<SpecialToken>,
}

/// How to pick special tokens when no config file accompanies the vocab.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Explicit special token strings. When empty, any entry that is not a
    /// byte-unit string, or that looks like `<|...|>` and no merge produces,
    /// is treated as special.
    pub specials: Vec<String>,
    pub pretokenizer: PreTokenizer,
}

pub fn save_tokenizer(tokenizer: &Tokenizer, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join(VOCAB_FILE), &vocab_json(tokenizer))?;
    write(dir.join(MERGES_FILE), &merges_txt(tokenizer))?;
    let config = TokenizerConfig {
        pretokenizer: tokenizer.pretokenizer(),
        byte_units: tokenizer.byte_map().to_table_string(),
        specials: tokenizer.specials().to_vec(),
    };
    let path = dir.join(CONFIG_FILE);
    let mut text = serde_json::to_string_pretty(&config).map_err(|e| Error::json(&path, e))?;
    text.push('\n');
    write(path, &text)
}

/// Loads a tokenizer directory written by [`save_tokenizer`] or a plain
/// GPT-2 `vocab.json` + `merges.txt` pair.
pub fn load_tokenizer(dir: impl AsRef<Path>) -> Result<Tokenizer> {
    load_tokenizer_with(dir, &LoadOptions::default())
}

pub fn load_tokenizer_with(dir: impl AsRef<Path>, options: &LoadOptions) -> Result<Tokenizer> {
    let dir = dir.as_ref();
    let config_path = dir.join(CONFIG_FILE);
    let config = if config_path.exists() {
        let text = read(&config_path)?;
        Some(
            serde_json::from_str::<TokenizerConfig>(&text)
                .map_err(|e| Error::parse(&config_path, e.line(), e.to_string()))?,
        )
    } else {
        None
    };
    load_files(dir.join(VOCAB_FILE), dir.join(MERGES_FILE), config, options)
}

/// Loads from explicit vocabulary and merges paths.
pub fn load_from_files(
    vocab_path: impl AsRef<Path>,
    merges_path: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<Tokenizer> {
    load_files(
        vocab_path.as_ref().to_path_buf(),
        merges_path.as_ref().to_path_buf(),
        None,
        options,
    )
}

fn load_files(
    vocab_path: PathBuf,
    merges_path: PathBuf,
    config: Option<TokenizerConfig>,
    options: &LoadOptions,
) -> Result<Tokenizer> {
    let vocab = parse_vocab(&vocab_path, &read(&vocab_path)?)?;
    let byte_map = match &config {
        Some(c) => ByteUnitMap::from_table_string(&c.byte_units)?,
        None => ByteUnitMap::gpt2(),
    };
    let pretokenizer = config
        .as_ref()
        .map_or(options.pretokenizer, |c| c.pretokenizer);

    let merge_lines = parse_merges(&merges_path, &read(&merges_path)?)?;

    let specials = match config {
        Some(c) => c.specials,
        None => infer_specials(&vocab, &merge_lines, &byte_map, options),
    };

    // Check rules against the vocabulary here so errors carry line numbers.
    let index: std::collections::HashMap<&str, usize> =
        vocab.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let special_ids: std::collections::HashSet<TokenId> = specials.iter().map(|s| s.id).collect();
    let known = |s: &str| {
        index
            .get(s)
            .is_some_and(|&id| !special_ids.contains(&(id as TokenId)))
    };
    for (line, m) in &merge_lines {
        for operand in [&m.left, &m.right] {
            if !known(operand) {
                return Err(Error::parse(
                    &merges_path,
                    *line,
                    format!("merge operand {operand:?} is not in the vocabulary"),
                ));
            }
        }
        if !known(&m.result()) {
            return Err(Error::parse(
                &merges_path,
                *line,
                format!("merge result {:?} is not in the vocabulary", m.result()),
            ));
        }
    }

    let merges = merge_lines.into_iter().map(|(_, m)| m).collect();
    Tokenizer::new(vocab, merges, specials, byte_map, pretokenizer)
}

fn infer_specials(
    vocab: &[String],
    merges: &[(usize, Merge)],
    byte_map: &ByteUnitMap,
    options: &LoadOptions,
) -> Vec<SpecialToken> {
    if !options.specials.is_empty() {
        return vocab
            .iter()
            .enumerate()
            .filter(|(_, s)| options.specials.contains(s))
            .map(|(id, s)| SpecialToken {
                content: s.clone(),
                id: id as TokenId,
            })
            .collect();
    }
    let produced: std::collections::HashSet<String> =
        merges.iter().map(|(_, m)| m.result()).collect();
    vocab
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let not_units = byte_map.decode_units(s).is_none();
            let marker = s.len() > 4 && s.starts_with("<|") && s.ends_with("|>") && !produced.contains(*s);
            not_units || marker
        })
        .map(|(id, s)| SpecialToken {
            content: s.clone(),
            id: id as TokenId,
        })
        .collect()
}

fn vocab_json(tokenizer: &Tokenizer) -> String {
    let mut out = String::from("{");
    for (id, tok) in tokenizer.vocab().iter().enumerate() {
        if id > 0 {
            out.push_str(", ");
        }
        out.push_str(&serde_json::to_string(tok).expect("strings always serialize"));
        out.push_str(": ");
        out.push_str(&id.to_string());
    }
    out.push_str("}\n");
    out
}

fn merges_txt(tokenizer: &Tokenizer) -> String {
    let mut out = String::from(MERGES_HEADER);
    out.push('\n');
    for m in tokenizer.merges() {
        out.push_str(&m.left);
        out.push(' ');
        out.push_str(&m.right);
        out.push('\n');
    }
    out
}

/// Parses `vocab.json` into an id-ordered token list.
pub fn parse_vocab(path: &Path, text: &str) -> Result<Vec<String>> {
    let entries: Entries = serde_json::from_str(text).map_err(|e| {
        if let Some(dup) = e.to_string().strip_prefix(DUPLICATE_PREFIX) {
            Error::Format(format!("{}: duplicate token string {dup}", path.display()))
        } else {
            Error::parse(path, e.line(), e.to_string())
        }
    })?;
    let n = entries.0.len();
    let mut vocab: Vec<Option<String>> = vec![None; n];
    for (tok, id) in entries.0 {
        let slot = usize::try_from(id)
            .ok()
            .and_then(|i| vocab.get_mut(i))
            .ok_or_else(|| {
                Error::Format(format!(
                    "{}: token {tok:?} has id {id}, ids must be contiguous from 0 to {}",
                    path.display(),
                    n.saturating_sub(1)
                ))
            })?;
        if slot.is_some() {
            return Err(Error::Format(format!(
                "{}: id {id} is assigned to more than one token",
                path.display()
            )));
        }
        *slot = Some(tok);
    }
    Ok(vocab.into_iter().map(|s| s.expect("ids are a permutation")).collect())
}

/// Parses `merges.txt`, returning each rule with its 1-based line number.
pub fn parse_merges(path: &Path, text: &str) -> Result<Vec<(usize, Merge)>> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if i == 0 && line.starts_with("#version") {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let (Some(left), Some(right), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, line_no, format!("expected `left right`, got {line:?}")));
        };
        if left.is_empty() || right.is_empty() {
            return Err(Error::parse(path, line_no, format!("empty merge operand in {line:?}")));
        }
        let m = Merge::new(left, right);
        if !seen.insert(m.clone()) {
            return Err(Error::parse(path, line_no, format!("duplicate merge rule {line:?}")));
        }
        out.push((line_no, m));
    }
    Ok(out)
}

const DUPLICATE_PREFIX: &str = "duplicate token string ";

struct Entries(Vec<(String, u64)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object mapping token strings to ids")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Entries, A::Error> {
                let mut seen = std::collections::HashSet::new();
                let mut out = Vec::with_capacity(map.size_hint().unwrap_or(0));
                while let Some((k, v)) = map.next_entry::<String, u64>()? {
                    if !seen.insert(k.clone()) {
                        return Err(serde::de::Error::custom(format!("{DUPLICATE_PREFIX}{k:?}")));
                    }
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train_bpe;

    #[test]
    fn save_load_save_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = ["the quick brown fox jumps over the lazy dog", "héllo wörld, the fox"];
        let t = train_bpe(corpus, 300, &["<|endoftext|>".to_string()]).unwrap();
        save_tokenizer(&t, dir.path().join("a")).unwrap();
        let loaded = load_tokenizer(dir.path().join("a")).unwrap();
        assert_eq!(loaded, t);
        save_tokenizer(&loaded, dir.path().join("b")).unwrap();
        for f in [VOCAB_FILE, MERGES_FILE, CONFIG_FILE] {
            let a = fs::read(dir.path().join("a").join(f)).unwrap();
            let b = fs::read(dir.path().join("b").join(f)).unwrap();
            assert_eq!(a, b, "{f} differs");
        }
    }

    #[test]
    fn merge_with_absent_token_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let t = train_bpe(["abab abab"], 258, &[]).unwrap();
        save_tokenizer(&t, dir.path()).unwrap();
        let merges = dir.path().join(MERGES_FILE);
        let mut text = fs::read_to_string(&merges).unwrap();
        text.push_str("q zz\n");
        fs::write(&merges, text).unwrap();
        let line_count = fs::read_to_string(&merges).unwrap().lines().count();
        match load_tokenizer(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, line_count),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_merge_line() {
        let err = parse_merges(Path::new("m.txt"), "#version: 0.2\na b\nabc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn duplicate_vocab_string_is_format_error() {
        let err = parse_vocab(Path::new("v.json"), r#"{"a": 0, "a": 1}"#).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err:?}");
    }

    #[test]
    fn non_contiguous_ids_rejected() {
        assert!(parse_vocab(Path::new("v.json"), r#"{"a": 0, "b": 2}"#).is_err());
        let err = parse_vocab(Path::new("v.json"), "{\"a\": 0,\n \"b\": }").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn plain_gpt2_pair_infers_endoftext() {
        let dir = tempfile::tempdir().unwrap();
        let t = train_bpe(["abab abab"], 259, &["<|endoftext|>".to_string()]).unwrap();
        save_tokenizer(&t, dir.path()).unwrap();
        fs::remove_file(dir.path().join(CONFIG_FILE)).unwrap();
        let loaded = load_tokenizer(dir.path()).unwrap();
        assert_eq!(loaded.specials(), t.specials());
    }
}
