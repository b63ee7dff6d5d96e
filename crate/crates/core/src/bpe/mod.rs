//! Byte-level BPE: training, encoding, and the vocab/merges file format.

mod freq;
mod io;
mod tokenizer;
mod train;

pub use freq::{count_token_frequencies, TokenFrequencyTable};
pub use io::{
    load_from_files, load_tokenizer, load_tokenizer_with, parse_merges, parse_vocab,
    save_tokenizer, LoadOptions, CONFIG_FILE, MERGES_FILE, VOCAB_FILE,
};
pub use tokenizer::{Merge, SpecialToken, TokenId, Tokenizer};
pub use train::{train_bpe, BpeTrainer};
