//! Synthetic bilingual worlds with a planted word alignment, for testing and
//! demonstrating the pipeline without external data.
//!
//! Target word vectors are random unit vectors; each source word vector is
//! the rotated-back image of its planted translation plus Gaussian noise, so
//! a rotation `Q` maps source vectors onto target vectors. Linked documents
//! mix planted translation pairs with unrelated distractor sentences.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::distributions::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::TokenizedSentence;
use crate::embeddings::{EmbeddingTable, LinearMap};
use crate::mining::LinkedDocumentPair;

/// Random orthogonal matrix from the QR decomposition of a Gaussian matrix.
pub fn random_rotation<R: Rng>(dim: usize, rng: &mut R) -> LinearMap {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut rows = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
            rows.push(q[(i, j)] * sign);
        }
    }
    LinearMap::from_row_major(dim, rows, true).expect("square matrix")
}

fn gaussian_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn source_word(i: usize) -> String {
    format!("sw{i:05}")
}

pub fn target_word(i: usize) -> String {
    format!("tw{i:05}")
}

/// Source and target tables related by a planted rotation.
#[derive(Debug, Clone)]
pub struct PlantedEmbeddings {
    pub src: EmbeddingTable,
    pub tgt: EmbeddingTable,
    /// Maps source vectors onto target vectors.
    pub rotation: LinearMap,
    /// Planted `(source, target)` word pairs, in source index order.
    pub alignment: Vec<(String, String)>,
}

/// `num_words` aligned word pairs in `dim` dimensions. Source vector `i`
/// is `Qᵀ t_{π(i)} + ε` with `ε ~ N(0, noise²)` per component.
pub fn planted_embeddings(num_words: usize, dim: usize, noise: f64, seed: u64) -> PlantedEmbeddings {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation = random_rotation(dim, &mut rng);
    let tgt_rows: Vec<(String, Vec<f64>)> = (0..num_words)
        .map(|j| (target_word(j), normalized(gaussian_vector(dim, &mut rng))))
        .collect();
    let mut perm: Vec<usize> = (0..num_words).collect();
    perm.shuffle(&mut rng);

    let mut src_rows = Vec::with_capacity(num_words);
    let mut alignment = Vec::with_capacity(num_words);
    for (i, &j) in perm.iter().enumerate() {
        let t = &tgt_rows[j].1;
        // Qᵀ t
        let mut v: Vec<f64> = (0..dim)
            .map(|c| (0..dim).map(|r| rotation.entry(r, c) * t[r]).sum())
            .collect();
        if noise > 0.0 {
            for x in &mut v {
                let e: f64 = StandardNormal.sample(&mut rng);
                *x += noise * e;
            }
        }
        src_rows.push((source_word(i), v));
        alignment.push((source_word(i), target_word(j)));
    }
    let (src, _) = EmbeddingTable::from_rows(dim, src_rows).expect("finite non-zero rows");
    let (tgt, _) = EmbeddingTable::from_rows(dim, tgt_rows).expect("finite non-zero rows");
    PlantedEmbeddings {
        src,
        tgt,
        rotation,
        alignment,
    }
}

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub num_words: usize,
    pub dim: usize,
    pub noise: f64,
    pub seed_pairs: usize,
    pub num_docs: usize,
    pub planted_per_doc: usize,
    pub distractors_per_doc: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub mono_sentences: usize,
    /// Exponent of the Zipf-like word distribution.
    pub zipf: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            num_words: 2000,
            dim: 50,
            noise: 0.01,
            seed_pairs: 1000,
            num_docs: 60,
            planted_per_doc: 8,
            distractors_per_doc: 8,
            min_len: 8,
            max_len: 16,
            mono_sentences: 4000,
            zipf: 0.3,
            seed: 17,
        }
    }
}

/// A generated world: embeddings, seed dictionary, linked documents and
/// a monolingual source corpus.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub embeddings: PlantedEmbeddings,
    pub seed_pairs: Vec<(String, String)>,
    pub documents: Vec<LinkedDocumentPair>,
    /// `(doc_id, src_index, tgt_index)` of every planted translation pair.
    pub planted: BTreeSet<(String, usize, usize)>,
    pub mono_src: Vec<TokenizedSentence>,
}

struct WordSampler {
    cumulative: Vec<f64>,
}

impl WordSampler {
    fn new(n: usize, exponent: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = (1..=n)
            .map(|r| {
                acc += (r as f64).powf(-exponent);
                acc
            })
            .collect();
        WordSampler { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c < x).min(self.cumulative.len() - 1)
    }
}

fn sentence<R: Rng>(cfg: &WorldConfig, sampler: &WordSampler, rng: &mut R) -> Vec<usize> {
    let len = rng.gen_range(cfg.min_len..=cfg.max_len);
    (0..len).map(|_| sampler.sample(rng)).collect()
}

pub fn synthetic_world(cfg: &WorldConfig) -> SyntheticWorld {
    let embeddings = planted_embeddings(cfg.num_words, cfg.dim, cfg.noise, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let sampler = WordSampler::new(cfg.num_words, cfg.zipf);
    let translate = |i: usize| embeddings.alignment[i].1.clone();

    let mut seed_idx: Vec<usize> = (0..cfg.num_words).collect();
    seed_idx.shuffle(&mut rng);
    let seed_pairs = seed_idx[..cfg.seed_pairs.min(cfg.num_words)]
        .iter()
        .map(|&i| embeddings.alignment[i].clone())
        .collect();

    let mut documents = Vec::with_capacity(cfg.num_docs);
    let mut planted = BTreeSet::new();
    for d in 0..cfg.num_docs {
        let doc_id = format!("doc{d:04}");
        let mut src = Vec::new();
        let mut tgt: Vec<(Vec<String>, Option<usize>)> = Vec::new();
        for _ in 0..cfg.planted_per_doc {
            let words = sentence(cfg, &sampler, &mut rng);
            let mut translated: Vec<String> = words
                .iter()
                .filter(|_| rng.gen::<f64>() > 0.1)
                .map(|&i| translate(i))
                .collect();
            translated.push(target_word(rng.gen_range(0..cfg.num_words)));
            translated.shuffle(&mut rng);
            tgt.push((translated, Some(src.len())));
            src.push(TokenizedSentence::from_tokens(words.iter().map(|&i| source_word(i))));
        }
        for _ in 0..cfg.distractors_per_doc {
            let s = sentence(cfg, &sampler, &mut rng);
            src.push(TokenizedSentence::from_tokens(s.iter().map(|&i| source_word(i))));
            let t = sentence(cfg, &sampler, &mut rng);
            tgt.push((t.iter().map(|&i| target_word(i)).collect(), None));
        }
        tgt.shuffle(&mut rng);
        let mut tgt_sentences = Vec::with_capacity(tgt.len());
        for (j, (tokens, origin)) in tgt.into_iter().enumerate() {
            if let Some(i) = origin {
                planted.insert((doc_id.clone(), i, j));
            }
            tgt_sentences.push(TokenizedSentence::from_tokens(tokens));
        }
        documents.push(LinkedDocumentPair {
            doc_id,
            src_sentences: src,
            tgt_sentences,
        });
    }

    let mono_src = (0..cfg.mono_sentences)
        .map(|_| {
            let s = sentence(cfg, &sampler, &mut rng);
            TokenizedSentence::from_tokens(s.iter().map(|&i| source_word(i)))
        })
        .collect();

    SyntheticWorld {
        embeddings,
        seed_pairs,
        documents,
        planted,
        mono_src,
    }
}
