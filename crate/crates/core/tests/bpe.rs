mod common;

use std::sync::LazyLock;

use proptest::prelude::*;
use tokgraft::bpe::{load_tokenizer, save_tokenizer, train_bpe, BpeTrainer, MERGES_FILE, VOCAB_FILE};
use tokgraft::{PreTokenizer, Tokenizer};

use common::{naive_encode, naive_train, random_corpus, rng, Language};

static MIXED: LazyLock<Tokenizer> = LazyLock::new(|| {
    let mut corpus = Language::a(1).corpus(200, 2);
    corpus.extend(Language::b(3).corpus(200, 4));
    train_bpe(&corpus, 600, &["<|endoftext|>".to_string()]).unwrap()
});

fn mixed_tokenizer() -> &'static Tokenizer {
    &MIXED
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn roundtrip_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let tok = mixed_tokenizer();
        prop_assert_eq!(tok.decode(&tok.encode(&bytes)).unwrap(), bytes);
    }

    #[test]
    fn roundtrip_arbitrary_text(text in "\\PC{0,64}") {
        let tok = mixed_tokenizer();
        prop_assert_eq!(tok.decode(&tok.encode(text.as_bytes())).unwrap(), text.as_bytes());
    }

    #[test]
    fn count_matches_encode(text in "[a-zéő <|>endoftx]{0,80}") {
        let tok = mixed_tokenizer();
        prop_assert_eq!(tok.count_tokens(text.as_bytes()), tok.encode(text.as_bytes()).len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trainer_matches_reference(seed in any::<u64>(), vocab in 256usize..300, len in 1usize..600) {
        let mut r = rng(seed);
        let corpus = vec![random_corpus(&mut r, &['a', 'b', 'c', 'd', 'é'], len)];
        let ours = BpeTrainer::new(vocab).train(&corpus).unwrap();
        let reference = naive_train(&corpus, vocab, PreTokenizer::Gpt2);
        prop_assert_eq!(ours.merges(), reference.as_slice());
    }

    #[test]
    fn encoder_matches_rule_by_rule_application(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alphabet = ['a', 'b', 'c', 'x'];
        let train = vec![random_corpus(&mut r, &alphabet, 800)];
        let tok = BpeTrainer::new(300).with_pretokenizer(PreTokenizer::None).train(&train).unwrap();
        let probe = random_corpus(&mut r, &alphabet, 200);
        prop_assert_eq!(tok.encode(probe.as_bytes()), naive_encode(&tok, probe.as_bytes()));
    }
}

#[test]
fn merges_respect_vocabulary_invariants() {
    let tok = mixed_tokenizer();
    for (rank, m) in tok.merges().iter().enumerate() {
        let l = tok.token_id(&m.left).unwrap();
        let r = tok.token_id(&m.right).unwrap();
        let out = tok.token_id(&m.result()).unwrap();
        assert!(l < out && r < out, "rank {rank}: {m:?} produces a lower id");
    }
    for id in 0..256 {
        assert!(tok.is_byte_unit(id));
    }
    assert!(tok.underivable_tokens().is_empty());
}

#[test]
fn save_load_save_is_byte_exact() {
    let tok = mixed_tokenizer();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    save_tokenizer(tok, a.path()).unwrap();
    let loaded = load_tokenizer(a.path()).unwrap();
    assert_eq!(&loaded, tok);
    save_tokenizer(&loaded, b.path()).unwrap();
    for f in [VOCAB_FILE, MERGES_FILE] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let text = "lang_a és lang_b <|endoftext|> mixed".as_bytes();
    assert_eq!(loaded.encode(text), tok.encode(text));
}

#[test]
fn specials_encode_atomically() {
    let tok = mixed_tokenizer();
    let eot = tok.token_id("<|endoftext|>").unwrap();
    let ids = tok.encode("ab<|endoftext|>cd");
    assert_eq!(ids.iter().filter(|&&i| i == eot).count(), 1);
    assert_eq!(tok.decode(&ids).unwrap(), b"ab<|endoftext|>cd");
}

#[test]
fn training_is_deterministic() {
    let corpus = Language::b(5).corpus(100, 6);
    let a = train_bpe(&corpus, 400, &[]).unwrap();
    let b = train_bpe(corpus.iter().rev(), 400, &[]).unwrap();
    assert_eq!(a, b);
}
