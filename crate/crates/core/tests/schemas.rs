//! Emitted manifests validate against the schemas shipped in `docs/schemas`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tokgraft::bpe::{save_tokenizer, train_bpe, CONFIG_FILE};
use tokgraft::corpus::{emit_mix_manifest, mix, Document, MixComponent, MixSpec, MixUnit};
use tokgraft::packing::{emit_training_shards, pack_it, PackConfig, PackMode, ShardConfig, TokenizedExample, INDEX_FILE};
use tokgraft::surgery::{emit_reinit_manifest, replace_tokens, FrequencySource, SurgeryPlan};

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(name);
    let value: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    jsonschema::validator_for(&value).unwrap()
}

fn check(schema_name: &str, file: &Path) {
    let instance: Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    let validator = schema(schema_name);
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
}

#[test]
fn reinit_manifest_and_tokenizer_config() {
    let dir = tempfile::tempdir().unwrap();
    let base = train_bpe(["the cat sat on the mat the cat sat on the hat"], 270, &["<|endoftext|>".into()]).unwrap();
    let plan = SurgeryPlan::new(&base, base.vocab_size() - 1, FrequencySource::IndexOrder).unwrap();
    let res = replace_tokens(&base, &["kéz kéz kéz láb láb fej fej"], &plan).unwrap();
    assert!(!res.replaced.is_empty());
    let path = dir.path().join("reinit.json");
    emit_reinit_manifest(&res, &path).unwrap();
    check("reinit_manifest.schema.json", &path);

    save_tokenizer(&res.adapted, dir.path()).unwrap();
    check("tokenizer_config.schema.json", &dir.path().join(CONFIG_FILE));
}

#[test]
fn mix_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = |p: &str| (0..10).map(|i| Document::new(format!("{p}{i}"), format!("{p} {i}"))).collect::<Vec<_>>();
    let spec = MixSpec {
        components: vec![
            MixComponent { name: "a".into(), corpus: "a.jsonl".into(), weight: 0.25 },
            MixComponent { name: "b".into(), corpus: "b.jsonl".into(), weight: 0.75 },
        ],
        seed: 3,
        unit: MixUnit::Samples,
        total: None,
    };
    let out = mix(&spec, vec![corpus("a"), corpus("b")], None).unwrap();
    let path = dir.path().join("mix.json");
    emit_mix_manifest(&spec, &out, Some(Path::new("tok")), &path).unwrap();
    check("mix_manifest.schema.json", &path);
}

#[test]
fn shard_index() {
    let dir = tempfile::tempdir().unwrap();
    let examples = vec![TokenizedExample { prompt_ids: vec![1, 2], completion_ids: vec![3], article_id: 1 }];
    let (seqs, _) = pack_it(examples, &PackConfig::new(4)).unwrap();
    let cfg = ShardConfig {
        seq_len: 4,
        mode: PackMode::It,
        pad_id: 0,
        separator_id: Some(9),
        sequences_per_shard: 10,
        mix_manifest: None,
        metadata: BTreeMap::from([("batch_size".to_string(), serde_json::json!(128))]),
    };
    emit_training_shards(&seqs, dir.path(), &cfg).unwrap();
    check("shard_index.schema.json", &dir.path().join(INDEX_FILE));
}
