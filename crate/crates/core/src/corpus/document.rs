use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One corpus record, serialized as a JSON-lines object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub language: String,
    #[serde(default)]
    pub source: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
            language: String::new(),
            source: String::new(),
        }
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }
}

/// Reads a JSON-lines corpus. Documents with empty text are dropped;
/// repeated `doc_id`s are an error.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    let mut dropped = 0usize;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if doc.text.is_empty() {
            dropped += 1;
            continue;
        }
        if !ids.insert(doc.doc_id.clone()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate doc_id {:?}", doc.doc_id),
            ));
        }
        docs.push(doc);
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} empty documents", path.display());
    }
    Ok(docs)
}

pub fn write_jsonl<'a, I>(path: impl AsRef<Path>, docs: I) -> Result<()>
where
    I: IntoIterator<Item = &'a Document>,
{
    write_jsonl_records(path, docs)
}

/// Writes any serializable records, one compact JSON object per line.
pub fn write_jsonl_records<T: Serialize, I: IntoIterator<Item = T>>(
    path: impl AsRef<Path>,
    records: I,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, &r).map_err(|e| Error::json(path, e))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip_drops_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let docs = vec![
            Document::new("a", "hello world").with_language("en"),
            Document::new("b", ""),
            Document::new("c", "szia világ").with_language("hu"),
        ];
        write_jsonl(&path, &docs).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(back, vec![docs[0].clone(), docs[2].clone()]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            "{\"doc_id\":\"a\",\"text\":\"x\"}\n{\"doc_id\":\"a\",\"text\":\"y\"}\n",
        )
        .unwrap();
        assert!(matches!(read_jsonl(&path), Err(Error::Parse { line: 2, .. })));
    }
}
