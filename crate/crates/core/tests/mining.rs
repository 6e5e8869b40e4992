mod common;

use std::collections::{BTreeSet, HashMap};

use lexmine::mining::{jaccard, mine_documents, translate_tokens};
use lexmine::{Lexicon, Provenance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lexicon(map: &HashMap<String, String>) -> Lexicon {
    Lexicon::from_pairs(map.clone(), Provenance::Projected)
}

#[test]
fn translation_matches_per_token_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let map = common::random_lexicon_map(&mut rng, 60);
    let lex = lexicon(&map);
    for _ in 0..1000 {
        let s = common::random_sentence(&mut rng, 80, 15);
        let mut expected = BTreeSet::new();
        for t in &s.tokens {
            expected.insert(map.get(t).cloned().unwrap_or_else(|| t.clone()));
        }
        assert_eq!(translate_tokens(&s, &lex), expected);
    }
}

#[test]
fn mining_matches_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let map = common::random_lexicon_map(&mut rng, 40);
    let lex = lexicon(&map);
    let docs = common::random_documents(&mut rng, 60, 40);
    for threshold in [0.0, 0.1, 0.25, 0.5, 1.0] {
        let mined = mine_documents(&docs, &lex, threshold).unwrap();
        let got: Vec<(String, usize, usize, f64)> = mined
            .iter()
            .map(|p| (p.doc_id.clone(), p.src_index, p.tgt_index, p.score))
            .collect();
        assert_eq!(got, common::mine_bruteforce(&docs, &map, threshold), "T={threshold}");
    }
}

#[test]
fn mined_pairs_are_recomputable_and_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let map = common::random_lexicon_map(&mut rng, 30);
    let lex = lexicon(&map);
    let docs = common::random_documents(&mut rng, 40, 30);
    let mined = mine_documents(&docs, &lex, 0.1).unwrap();
    assert!(!mined.is_empty());
    let by_id: HashMap<&str, &lexmine::mining::LinkedDocumentPair> =
        docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut seen = BTreeSet::new();
    for p in &mined {
        assert!(seen.insert((p.doc_id.clone(), p.src_index)), "source mined twice");
        assert!(p.score >= 0.1 && p.score <= 1.0);
        let translated = translate_tokens(&p.src, &lex);
        assert_eq!(jaccard(&translated, &p.tgt.token_set), p.score);
        let doc = by_id[p.doc_id.as_str()];
        for (j, t) in doc.tgt_sentences.iter().enumerate() {
            let s = jaccard(&translated, &t.token_set);
            assert!(s <= p.score);
            if j < p.tgt_index {
                assert!(s < p.score, "earlier target ties but was not chosen");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_threshold_yields_subset(seed in any::<u64>(), lo in 0.0f64..1.0, delta in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = common::random_lexicon_map(&mut rng, 25);
        let lex = lexicon(&map);
        let docs = common::random_documents(&mut rng, 5, 25);
        let hi = (lo + delta).min(1.0);
        let low: BTreeSet<(String, usize, usize)> = mine_documents(&docs, &lex, lo)
            .unwrap()
            .into_iter()
            .map(|p| (p.doc_id, p.src_index, p.tgt_index))
            .collect();
        let high: BTreeSet<(String, usize, usize)> = mine_documents(&docs, &lex, hi)
            .unwrap()
            .into_iter()
            .map(|p| (p.doc_id, p.src_index, p.tgt_index))
            .collect();
        prop_assert!(high.is_subset(&low));
    }

    #[test]
    fn jaccard_symmetric_and_bounded(
        a in prop::collection::btree_set("[a-f]", 0..6),
        b in prop::collection::btree_set("[a-f]", 0..6),
    ) {
        let ab = jaccard(&a, &b);
        prop_assert_eq!(ab, jaccard(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert_eq!(jaccard(&a, &a), 1.0);
        }
    }
}
