//! Reversible mapping between raw bytes and printable "unit" characters.
//!
//! Byte-level BPE vocabularies are stored as text, so every byte is first
//! mapped to a visible character. The table is the one GPT-2 ships with:
//! printable Latin-1 bytes map to themselves and the rest are shifted into
//! the U+0100 block, which keeps whitespace and control bytes out of the
//! vocabulary and merges files.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct ByteUnitMap {
    forward: [char; 256],
    reverse: HashMap<char, u8>,
}

impl ByteUnitMap {
    /// The fixed GPT-2 byte-to-unicode table.
    pub fn gpt2() -> Self {
        let mut forward = ['\0'; 256];
        let mut shift = 0u32;
        for b in 0..=255u8 {
            forward[b as usize] = if is_gpt2_printable(b) {
                char::from(b)
            } else {
                let c = char::from_u32(256 + shift).expect("U+0100 block is valid");
                shift += 1;
                c
            };
        }
        Self::from_table(forward).expect("gpt2 table is a bijection")
    }

    /// Builds a map from an explicit table; rejects tables that are not
    /// one-to-one.
    pub fn from_table(forward: [char; 256]) -> Result<Self> {
        let mut reverse = HashMap::with_capacity(256);
        for (b, &c) in forward.iter().enumerate() {
            if reverse.insert(c, b as u8).is_some() {
                return Err(Error::Format(format!(
                    "byte unit map assigns {c:?} to more than one byte"
                )));
            }
        }
        Ok(Self { forward, reverse })
    }

    /// Parses the 256-character table string written by [`Self::to_table_string`].
    pub fn from_table_string(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        let forward: [char; 256] = chars.try_into().map_err(|v: Vec<char>| {
            Error::Format(format!("byte unit table has {} entries, expected 256", v.len()))
        })?;
        Self::from_table(forward)
    }

    pub fn to_table_string(&self) -> String {
        self.forward.iter().collect()
    }

    #[inline]
    pub fn unit(&self, byte: u8) -> char {
        self.forward[byte as usize]
    }

    #[inline]
    pub fn byte(&self, unit: char) -> Option<u8> {
        self.reverse.get(&unit).copied()
    }

    pub fn encode_bytes(&self, bytes: &[u8]) -> String {
        bytes.iter().map(|&b| self.unit(b)).collect()
    }

    /// Converts a unit string back to bytes. Returns `None` if any character
    /// is not a unit.
    pub fn decode_units(&self, units: &str) -> Option<Vec<u8>> {
        units.chars().map(|c| self.byte(c)).collect()
    }

    /// Unit characters in GPT-2 vocabulary order: the printable bytes in
    /// ascending order followed by the remapped ones.
    pub fn vocab_order(&self) -> Vec<u8> {
        let mut order: Vec<u8> = (0..=255u8).filter(|&b| is_gpt2_printable(b)).collect();
        order.extend((0..=255u8).filter(|&b| !is_gpt2_printable(b)));
        order
    }

    pub fn is_gpt2(&self) -> bool {
        *self == Self::gpt2()
    }
}

impl Default for ByteUnitMap {
    fn default() -> Self {
        Self::gpt2()
    }
}

impl fmt::Debug for ByteUnitMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_gpt2() {
            f.write_str("ByteUnitMap(gpt2)")
        } else {
            write!(f, "ByteUnitMap({:?})", self.to_table_string())
        }
    }
}

fn is_gpt2_printable(b: u8) -> bool {
    matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF)
}
