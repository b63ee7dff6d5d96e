//! Corpus preparation: JSON-lines documents, MinHash deduplication and
//! weighted bilingual mixing.

mod dedup;
mod document;
mod minhash;
mod mix;

pub use dedup::{
    candidate_probability, choose_bands, dedup, is_candidate, DedupConfig, DedupOutcome,
    DropRecord, DEFAULT_THRESHOLD, TARGET_RECALL_AT_THRESHOLD,
};
pub use document::{read_jsonl, write_jsonl, write_jsonl_records, Document};
pub use minhash::{
    jaccard, minhash_signature, shingles, signature_of_set, HashFamily, MinHashSignature,
    DEFAULT_PERMUTATIONS, MIN_PERMUTATIONS,
};
pub use mix::{
    emit_mix_manifest, load_mix_manifest, mix, stream_digest, ComponentReport, MixComponent,
    MixManifest, MixOutput, MixReport, MixSpec, MixUnit, MIX_MANIFEST_VERSION,
};
