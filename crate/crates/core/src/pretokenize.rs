//! Word splitting applied before BPE merges.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use fancy_regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// GPT-2's contraction-aware splitting rule.
pub const GPT2_PATTERN: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

static GPT2_REGEX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(GPT2_PATTERN).expect("static pattern compiles"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreTokenizer {
    #[default]
    Gpt2,
    /// Treat every segment as a single word.
    None,
}

impl PreTokenizer {
    pub fn id(self) -> &'static str {
        match self {
            PreTokenizer::Gpt2 => "gpt2",
            PreTokenizer::None => "none",
        }
    }

    /// Splits `bytes` into contiguous pieces that concatenate back to the
    /// input. Invalid UTF-8 runs become pieces of their own.
    pub fn split<'a>(self, bytes: &'a [u8]) -> Vec<&'a [u8]> {
        let mut out = Vec::new();
        self.split_into(bytes, &mut out);
        out
    }

    pub fn split_into<'a>(self, bytes: &'a [u8], out: &mut Vec<&'a [u8]>) {
        if bytes.is_empty() {
            return;
        }
        if self == PreTokenizer::None {
            out.push(bytes);
            return;
        }
        let mut offset = 0;
        for chunk in bytes.utf8_chunks() {
            let valid = chunk.valid();
            if !valid.is_empty() {
                split_gpt2(valid, &bytes[offset..offset + valid.len()], out);
                offset += valid.len();
            }
            let invalid = chunk.invalid();
            if !invalid.is_empty() {
                out.push(&bytes[offset..offset + invalid.len()]);
                offset += invalid.len();
            }
        }
    }
}

fn split_gpt2<'a>(text: &str, raw: &'a [u8], out: &mut Vec<&'a [u8]>) {
    let mut last = 0;
    for m in GPT2_REGEX.find_iter(text) {
        let Ok(m) = m else {
            // Backtrack limit: keep the remainder as one piece.
            break;
        };
        if m.start() > last {
            out.push(&raw[last..m.start()]);
        }
        if m.end() > m.start() {
            out.push(&raw[m.start()..m.end()]);
        }
        last = m.end();
    }
    if last < raw.len() {
        out.push(&raw[last..]);
    }
}

impl fmt::Display for PreTokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PreTokenizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gpt2" => Ok(PreTokenizer::Gpt2),
            "none" => Ok(PreTokenizer::None),
            other => Err(Error::Format(format!("unknown pre-tokenizer {other:?}"))),
        }
    }
}
