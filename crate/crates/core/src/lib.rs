//! Adapting byte-level BPE tokenizers to a new language.
//!
//! The crate covers the whole data-side recipe:
//!
//! * [`bpe`]: train, load, save and run GPT-2 format tokenizers.
//! * [`fertility`]: parse CoNLL-U treebanks and measure tokens per word.
//! * [`surgery`]: swap a base tokenizer's rarest tokens for tokens learned on
//!   a new language while keeping every other id in place.
//! * [`corpus`]: MinHash deduplication and seeded weighted mixing.
//! * [`packing`]: fixed-length training sequences with per-article ids and
//!   loss weights, written as checksummed shards.

pub mod bpe;
pub mod bytes;
pub mod corpus;
pub mod error;
pub mod fertility;
pub mod packing;
pub mod pretokenize;
pub mod surgery;

pub use bpe::{Merge, TokenFrequencyTable, TokenId, Tokenizer};
pub use bytes::ByteUnitMap;
pub use error::{Error, Result};
pub use pretokenize::PreTokenizer;

/// Library version, shared by the CLI and any host-language bindings.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
