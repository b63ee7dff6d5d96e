use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surface word forms of a Universal Dependencies treebank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Treebank {
    pub words: Vec<String>,
    pub language: String,
    pub source_id: String,
}

impl Treebank {
    pub fn new(words: Vec<String>, language: impl Into<String>, source_id: impl Into<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::InvalidArgument("treebank has no words".into()));
        }
        if words.iter().any(String::is_empty) {
            return Err(Error::InvalidArgument("treebank contains an empty word".into()));
        }
        Ok(Self {
            words,
            language: language.into(),
            source_id: source_id.into(),
        })
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }
}

/// Reads a CoNLL-U file. Language and source id are taken from the UD file
/// naming scheme (`hu_szeged-ud-test.conllu` gives `hu` and
/// `hu_szeged-ud-test`).
pub fn parse_conllu(path: impl AsRef<Path>) -> Result<Treebank> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let language = source_id
        .split(['_', '-'])
        .next()
        .unwrap_or_default()
        .to_string();
    let words = parse_conllu_str(path, &text)?;
    Ok(Treebank {
        words,
        language,
        source_id,
    })
}

/// Extracts FORM values of syntactic word lines. Multiword ranges (`1-2`)
/// and empty nodes (`1.1`) are skipped.
pub fn parse_conllu_str(path: &Path, text: &str) -> Result<Vec<String>> {
    let mut words = Vec::new();
    let mut line_count = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        line_count = line_no;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 10 tab-separated fields, found {}", fields.len()),
            ));
        }
        let id = fields[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        if id.parse::<u32>().is_err() {
            return Err(Error::parse(path, line_no, format!("invalid word id {id:?}")));
        }
        let form = fields[1];
        if form.is_empty() {
            return Err(Error::parse(path, line_no, "empty FORM field"));
        }
        words.push(form.to_string());
    }
    if words.is_empty() {
        return Err(Error::parse(path, line_count, "no sentences found"));
    }
    Ok(words)
}
