mod common;

use tokgraft::bpe::train_bpe;
use tokgraft::fertility::{
    fertility, fertility_sweep, parse_conllu, write_sweep_csv, FertilityOptions, SweepConfig, Treebank,
};
use tokgraft::Error;

use common::Language;

#[test]
fn word_order_does_not_matter() {
    let tok = train_bpe(Language::a(1).corpus(200, 2), 500, &[]).unwrap();
    let tb = Language::a(1).treebank(100, 3);
    let mut words = tb.words.clone();
    words.reverse();
    let reversed = Treebank::new(words, "lang_a", "rev").unwrap();
    let opts = FertilityOptions::default();
    let f1 = fertility(&tok, &tb, opts).unwrap();
    let f2 = fertility(&tok, &reversed, opts).unwrap();
    assert_eq!(f1.fertility, f2.fertility);
    assert_eq!(f1.token_count, f2.token_count);
}

#[test]
fn fertility_is_at_least_one() {
    let tok = train_bpe(Language::a(1).corpus(200, 2), 500, &[]).unwrap();
    for tb in [Language::a(1).treebank(50, 3), Language::b(2).treebank(50, 4)] {
        assert!(fertility(&tok, &tb, FertilityOptions::default()).unwrap().fertility >= 1.0);
    }
}

#[test]
fn conllu_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hu_szeged-ud-test.conllu");
    std::fs::write(&path, Language::b(1).conllu(10, 2)).unwrap();
    let tb = parse_conllu(&path).unwrap();
    assert_eq!(tb.language, "hu");
    assert_eq!(tb.source_id, "hu_szeged-ud-test");
    assert!(tb.word_count() >= 50);
}

#[test]
fn sweep_shape_and_base_row() {
    let base = train_bpe(Language::a(1).corpus(300, 2), 600, &[]).unwrap();
    let corpus_b = Language::b(3).corpus(300, 4);
    let tbs = [Language::a(1).treebank(50, 5), Language::b(3).treebank(50, 6)];
    let ks = vec![400, 0, 256, 500];
    let rows = fertility_sweep(
        &base,
        &corpus_b,
        &tbs,
        &SweepConfig {
            k_values: ks.clone(),
            frequency: None,
            fertility: FertilityOptions::default(),
        },
    )
    .unwrap();
    assert_eq!(rows.len(), ks.len() * tbs.len());
    assert!(rows.windows(2).all(|w| (w[0].k, &w[0].treebank) <= (w[1].k, &w[1].treebank)));
    for tb in &tbs {
        let direct = fertility(&base, tb, FertilityOptions::default()).unwrap();
        let row = rows.iter().find(|r| r.k == 0 && r.treebank == tb.source_id).unwrap();
        assert_eq!(row.fertility.to_bits(), direct.fertility.to_bits());
    }
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), rows.len() + 1);
}

#[test]
fn sweep_names_bad_k() {
    let base = train_bpe(Language::a(1).corpus(100, 2), 300, &[]).unwrap();
    let err = fertility_sweep(
        &base,
        &Language::b(3).corpus(10, 4),
        &[Language::a(1).treebank(5, 5)],
        &SweepConfig {
            k_values: vec![0, 100],
            frequency: None,
            fertility: FertilityOptions::default(),
        },
    )
    .unwrap_err();
    assert!(matches!(err, Error::AtK { k: 100, .. }));
}
