mod common;

use std::collections::BTreeMap;

use lexmine::corpus::{
    count_frequencies, join_symbols, learn_bpe, learn_bpe_from_counts, tokenize, TokenizedSentence,
    TokenizerConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_word<R: Rng>(rng: &mut R, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

fn word_counts(corpus: &[TokenizedSentence]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for s in corpus {
        for t in &s.tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[test]
fn tokenization_is_repeatable_over_synthetic_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pieces = ["The", "bus,", "STOPPED.", "Él", "«quoted»", "x-y", "  ", "\t", "déjà", "!!"];
    let lines: Vec<String> = (0..100)
        .map(|_| {
            (0..rng.gen_range(0..12))
                .map(|_| pieces[rng.gen_range(0..pieces.len())])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let cfg = TokenizerConfig::default();
    let first: Vec<_> = lines.iter().map(|l| tokenize(l, &cfg)).collect();
    let second: Vec<_> = lines.iter().map(|l| tokenize(l, &cfg)).collect();
    assert_eq!(first, second);
    for s in &first {
        assert!(s.tokens.iter().all(|t| !t.is_empty()));
        assert_eq!(s.token_set, s.tokens.iter().cloned().collect());
    }
}

#[test]
fn frequency_total_matches_independent_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = TokenizerConfig::default();
    let mut lines = Vec::new();
    let mut emitted = 0;
    while emitted < 10_000 {
        let n = rng.gen_range(1..30).min(10_000 - emitted);
        let line: Vec<String> = (0..n).map(|_| format!("t{}", rng.gen_range(0..500))).collect();
        emitted += n;
        lines.push(line.join(" "));
    }
    let corpus: Vec<_> = lines.iter().map(|l| tokenize(l, &cfg)).collect();
    let table = count_frequencies(&corpus);

    let mut recount: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total = 0u64;
    for line in &lines {
        for w in line.split(' ') {
            *recount.entry(w).or_insert(0) += 1;
            total += 1;
        }
    }
    assert_eq!(total, 10_000);
    assert_eq!(table.total(), total);
    assert_eq!(table.len(), recount.len());
    for (w, c) in recount {
        assert_eq!(table.count(w), c);
    }
}

#[test]
fn bpe_matches_bruteforce_on_small_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for round in 0..60 {
        let alphabet: Vec<char> = "abcde".chars().take(2 + round % 4).collect();
        let words = rng.gen_range(1..=200);
        let tokens: Vec<String> = (0..words).map(|_| random_word(&mut rng, &alphabet, 7)).collect();
        let corpus = vec![TokenizedSentence::from_tokens(tokens)];
        let counts = word_counts(&corpus);
        let merges = rng.gen_range(0..40);
        let learned = learn_bpe(&corpus, merges).unwrap();
        let expected = common::bpe_bruteforce(&counts, merges);
        assert_eq!(learned.merges(), expected.as_slice(), "round {round}");
    }
}

#[test]
fn chosen_merge_dominates_every_pair_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alphabet: Vec<char> = "abcd".chars().collect();
    let tokens: Vec<String> = (0..150).map(|_| random_word(&mut rng, &alphabet, 6)).collect();
    let corpus = vec![TokenizedSentence::from_tokens(tokens)];
    let counts = word_counts(&corpus);
    let vocab = learn_bpe(&corpus, 30).unwrap();
    for step in 0..vocab.num_merges() {
        let before = common::pair_counts_after(&counts, &vocab.merges()[..step]);
        let chosen = before[&vocab.merges()[step]];
        assert!(before.values().all(|&c| c <= chosen), "step {step}");
    }
}

#[test]
fn bpe_round_trips_random_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let alphabet: Vec<char> = "abcdefghé".chars().collect();
    let training: Vec<String> = (0..400).map(|_| random_word(&mut rng, &alphabet, 9)).collect();
    let vocab = learn_bpe(&[TokenizedSentence::from_tokens(training)], 60).unwrap();
    let extended: Vec<char> = "abcdefghéxyzж".chars().collect();
    for _ in 0..1000 {
        let word = random_word(&mut rng, &extended, 12);
        let symbols = vocab.apply(&word);
        assert_eq!(join_symbols(&symbols), word);
    }
}

#[test]
fn from_counts_matches_corpus_entry_point() {
    let corpus = vec![TokenizedSentence::from_tokens(["low", "lower", "newest", "widest", "low"])];
    let a = learn_bpe(&corpus, 10).unwrap();
    let b = learn_bpe_from_counts([("low", 2), ("lower", 1), ("newest", 1), ("widest", 1)], 10).unwrap();
    assert_eq!(a, b);
}

fn corpus_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[abc]{1,6}", 1..60)
}

proptest! {
    #[test]
    fn training_words_segment_inside_vocab(words in corpus_strategy(), merges in 0usize..25) {
        let corpus = vec![TokenizedSentence::from_tokens(words.clone())];
        let vocab = learn_bpe(&corpus, merges).unwrap();
        prop_assert!(vocab.num_merges() <= merges);
        for w in &words {
            let symbols = vocab.apply(w);
            for s in &symbols {
                prop_assert!(vocab.contains(s), "{s} not in vocab");
            }
            prop_assert_eq!(join_symbols(&symbols), w.clone());
        }
    }

    #[test]
    fn tokenize_is_idempotent(line in "[ a-zA-Z.,!?'éÉ-]{0,40}") {
        let cfg = TokenizerConfig::default();
        let once = tokenize(&line, &cfg);
        let twice = tokenize(&once.joined(), &cfg);
        prop_assert_eq!(once.tokens, twice.tokens);
    }
}
