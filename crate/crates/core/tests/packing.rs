use std::collections::BTreeMap;

use proptest::prelude::*;
use tokgraft::bpe::train_bpe;
use tokgraft::corpus::Document;
use tokgraft::packing::{
    emit_training_shards, examples_from_documents, pack_it, pack_pretrain, read_training_shards, PackConfig,
    PackMode, ShardConfig, TokenizedExample, PAD_ARTICLE,
};

fn example(id: u64, prompt: Vec<u32>, completion: Vec<u32>) -> TokenizedExample {
    TokenizedExample {
        prompt_ids: prompt,
        completion_ids: completion,
        article_id: id,
    }
}

fn lengths() -> impl Strategy<Value = Vec<(usize, usize)>> {
    proptest::collection::vec((0usize..30, 1usize..30), 0..60)
}

proptest! {
    #[test]
    fn pretrain_conserves_tokens(lens in lengths(), s in 2usize..50, sep in proptest::option::of(0u32..5)) {
        let examples: Vec<_> = lens
            .iter()
            .enumerate()
            .map(|(i, &(_, c))| example(i as u64 + 1, vec![], (0..c as u32).map(|t| t + 10).collect()))
            .collect();
        let cfg = PackConfig { seq_len: s, pad_id: 0, separator_id: sep };
        let seqs = pack_pretrain(examples.clone(), &cfg).unwrap();
        let mut flat = Vec::new();
        for (i, q) in seqs.iter().enumerate() {
            prop_assert_eq!(q.len(), s);
            let content = q.content_tokens();
            // Only the final sequence carries padding.
            if i + 1 < seqs.len() {
                prop_assert_eq!(content, s);
            }
            prop_assert!(q.article_ids[content..].iter().all(|&a| a == PAD_ARTICLE));
            flat.extend(q.token_ids[..content].iter().zip(&q.article_ids[..content]).map(|(&t, &a)| (t, a)));
        }
        let expected: Vec<(u32, u64)> = examples
            .iter()
            .flat_map(|e| e.completion_ids.iter().copied().chain(sep).map(move |t| (t, e.article_id)))
            .collect();
        prop_assert_eq!(flat, expected);
    }

    #[test]
    fn it_places_whole_examples(lens in lengths(), s in 2usize..50) {
        let examples: Vec<_> = lens
            .iter()
            .enumerate()
            .map(|(i, &(p, c))| example(i as u64 + 1, vec![1; p], vec![2; c]))
            .collect();
        let (seqs, discards) = pack_it(examples.clone(), &PackConfig::new(s)).unwrap();
        let discarded: Vec<u64> = discards.iter().map(|d| d.article_id).collect();
        let expected: Vec<u64> = examples.iter().filter(|e| e.len() > s).map(|e| e.article_id).collect();
        prop_assert_eq!(discarded, expected);

        let mut seen: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
        for q in &seqs {
            prop_assert_eq!(q.len(), s);
            for ((&a, &w), &t) in q.article_ids.iter().zip(&q.loss_weights).zip(&q.token_ids) {
                if a == PAD_ARTICLE {
                    prop_assert_eq!(w, 0.0);
                    continue;
                }
                let e = seen.entry(a).or_default();
                if t == 1 { e.0 += 1; prop_assert_eq!(w, 0.0) } else { e.1 += 1; prop_assert_eq!(w, 1.0) }
            }
        }
        for e in examples.iter().filter(|e| e.len() <= s) {
            prop_assert_eq!(seen.get(&e.article_id).copied(), Some((e.prompt_ids.len(), e.completion_ids.len())));
        }
    }
}

#[test]
fn documents_to_shards() {
    let tok = train_bpe(["the cat sat on the mat", "a dog ran"], 280, &[]).unwrap();
    let docs = vec![
        Document::new("x", "the cat sat"),
        Document::new("y", "on the mat, a dog ran far away"),
    ];
    let examples = examples_from_documents(&docs, &tok);
    assert_eq!(examples.iter().map(|e| e.article_id).collect::<Vec<_>>(), vec![1, 2]);
    let seqs = pack_pretrain(examples, &PackConfig::new(8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut metadata = BTreeMap::new();
    metadata.insert("learning_rate".to_string(), serde_json::json!(1.5e-5));
    let cfg = ShardConfig {
        seq_len: 8,
        mode: PackMode::Pretrain,
        pad_id: 0,
        separator_id: None,
        sequences_per_shard: 1,
        mix_manifest: Some("mix.json".into()),
        metadata,
    };
    let index = emit_training_shards(&seqs, dir.path(), &cfg).unwrap();
    assert_eq!(index.shards.len(), seqs.len());
    let (read_index, read) = read_training_shards(dir.path()).unwrap();
    assert_eq!(read, seqs);
    assert_eq!(read_index.config.metadata["learning_rate"], 1.5e-5);
    let text: Vec<u8> = read
        .iter()
        .flat_map(|q| q.token_ids[..q.content_tokens()].to_vec())
        .flat_map(|id| tok.token_bytes(id).unwrap().to_vec())
        .collect();
    assert_eq!(text, b"the cat saton the mat, a dog ran far away");
}
