//! Brute-force reference implementations used by the integration and
//! acceptance tests. Nothing here calls the library routine it checks.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use lexmine::corpus::TokenizedSentence;
use lexmine::mining::LinkedDocumentPair;
use rand::Rng;

pub const EOW: &str = "</w>";

/// BPE that recounts every adjacent pair from scratch at each step.
pub fn bpe_bruteforce(word_counts: &BTreeMap<String, u64>, num_merges: usize) -> Vec<(String, String)> {
    let mut words: Vec<(Vec<String>, u64)> = word_counts
        .iter()
        .filter(|(w, _)| !w.is_empty())
        .map(|(w, &c)| {
            let mut symbols: Vec<String> = w.chars().map(|ch| ch.to_string()).collect();
            let last = symbols.len() - 1;
            symbols[last] = format!("{}{EOW}", symbols[last]);
            (symbols, c)
        })
        .collect();
    let mut merges = Vec::new();
    for _ in 0..num_merges {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (symbols, c) in &words {
            for i in 0..symbols.len().saturating_sub(1) {
                *counts
                    .entry((symbols[i].clone(), symbols[i + 1].clone()))
                    .or_insert(0) += c;
            }
        }
        // BTreeMap iterates pairs in ascending order, so the first maximum
        // is the lexicographically smallest.
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &c) in &counts {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((pair, c));
            }
        }
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        let pair = pair.clone();
        for (symbols, _) in &mut words {
            let mut out = Vec::new();
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
                    out.push(format!("{}{}", pair.0, pair.1));
                    i += 2;
                } else {
                    out.push(symbols[i].clone());
                    i += 1;
                }
            }
            *symbols = out;
        }
        merges.push(pair);
    }
    merges
}

/// Counts of every adjacent pair after applying `merges` in order.
pub fn pair_counts_after(
    word_counts: &BTreeMap<String, u64>,
    merges: &[(String, String)],
) -> BTreeMap<(String, String), u64> {
    let mut counts = BTreeMap::new();
    for (w, &c) in word_counts {
        let mut symbols: Vec<String> = w.chars().map(|ch| ch.to_string()).collect();
        let last = symbols.len() - 1;
        symbols[last] = format!("{}{EOW}", symbols[last]);
        for (a, b) in merges {
            let mut out = Vec::new();
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == a && &symbols[i + 1] == b {
                    out.push(format!("{a}{b}"));
                    i += 2;
                } else {
                    out.push(symbols[i].clone());
                    i += 1;
                }
            }
            symbols = out;
        }
        for i in 0..symbols.len().saturating_sub(1) {
            *counts
                .entry((symbols[i].clone(), symbols[i + 1].clone()))
                .or_insert(0) += c;
        }
    }
    counts
}

fn unit(v: &[f64]) -> Vec<f64> {
    let mut sq = 0.0;
    for x in v {
        sq += x * x;
    }
    let n = sq.sqrt();
    v.iter().map(|x| x / n).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (unit(a), unit(b));
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

fn mean_of_top(mut values: Vec<f64>, k: usize) -> f64 {
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values[..k].iter().sum::<f64>() / k as f64
}

/// CSLS straight from its definition, with fully sorted neighbor lists.
pub fn csls_direct(queries: &[Vec<f64>], candidates: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let qk = k.min(queries.len());
    let r_cand: Vec<f64> = candidates
        .iter()
        .map(|y| mean_of_top(queries.iter().map(|q| cosine(q, y)).collect(), qk))
        .collect();
    queries
        .iter()
        .map(|x| {
            let cos: Vec<f64> = candidates.iter().map(|y| cosine(x, y)).collect();
            let r_x = mean_of_top(cos.clone(), k);
            cos.iter()
                .zip(&r_cand)
                .map(|(c, r_y)| 2.0 * c - r_x - r_y)
                .collect()
        })
        .collect()
}

/// RMSS straight from its definition: each neighbor contributes cos/(2k).
pub fn rmss_direct(src: &[Vec<f64>], tgt: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let term = |mut sims: Vec<f64>| -> f64 {
        sims.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sims[..k].iter().map(|c| c / (2.0 * k as f64)).sum()
    };
    src.iter()
        .map(|x| {
            let nn_x = term(tgt.iter().map(|z| cosine(x, z)).collect());
            tgt.iter()
                .map(|y| {
                    let nn_y = term(src.iter().map(|z| cosine(y, z)).collect());
                    cosine(x, y) / (nn_x + nn_y)
                })
                .collect()
        })
        .collect()
}

pub fn jaccard_hash(s: &HashSet<&str>, t: &HashSet<&str>) -> f64 {
    let inter = s.iter().filter(|x| t.contains(*x)).count();
    let union = s.len() + t.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// All-pairs mining: score every pair, take the first maximum per source,
/// keep it when positive and at least `threshold`.
pub fn mine_bruteforce(
    docs: &[LinkedDocumentPair],
    lex: &HashMap<String, String>,
    threshold: f64,
) -> Vec<(String, usize, usize, f64)> {
    let mut out = Vec::new();
    for doc in docs {
        let targets: Vec<HashSet<&str>> = doc
            .tgt_sentences
            .iter()
            .map(|t| t.tokens.iter().map(String::as_str).collect())
            .collect();
        for (i, s) in doc.src_sentences.iter().enumerate() {
            let translated: HashSet<&str> = s
                .tokens
                .iter()
                .map(|w| lex.get(w).map(String::as_str).unwrap_or(w.as_str()))
                .collect();
            let scores: Vec<f64> = targets.iter().map(|t| jaccard_hash(&translated, t)).collect();
            let Some(max) = scores.iter().cloned().reduce(f64::max) else { continue };
            let j = scores.iter().position(|&x| x == max).unwrap();
            if max > 0.0 && max >= threshold {
                out.push((doc.doc_id.clone(), i, j, max));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Sentence over a small vocabulary `w0..w{vocab}` so overlaps are common.
pub fn random_sentence<R: Rng>(rng: &mut R, vocab: usize, max_len: usize) -> TokenizedSentence {
    let len = rng.gen_range(0..=max_len);
    TokenizedSentence::from_tokens((0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))))
}

pub fn random_documents<R: Rng>(rng: &mut R, count: usize, vocab: usize) -> Vec<LinkedDocumentPair> {
    (0..count)
        .map(|d| {
            let ns = rng.gen_range(0..=50);
            let nt = rng.gen_range(0..=50);
            LinkedDocumentPair {
                doc_id: format!("d{:03}", rng.gen_range(0..count * 2) * 1000 + d),
                src_sentences: (0..ns).map(|_| random_sentence(rng, vocab, 12)).collect(),
                tgt_sentences: (0..nt).map(|_| random_sentence(rng, vocab, 12)).collect(),
            }
        })
        .collect()
}

/// Maps about half of `w0..w{vocab}` onto other vocabulary words.
pub fn random_lexicon_map<R: Rng>(rng: &mut R, vocab: usize) -> HashMap<String, String> {
    let mut map = HashMap::new();
    for i in 0..vocab {
        if rng.gen_bool(0.5) {
            map.insert(format!("w{i}"), format!("w{}", rng.gen_range(0..vocab)));
        }
    }
    map
}
