//! Ratio-margin scoring of sentence embeddings, Jaccard retrieval and
//! precision/recall evaluation against gold bitext.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_lines, TokenizedSentence};
use crate::embeddings::{dot, load_vectors, top_k_mean, unit};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::mining::{best_target, translate_tokens};

/// Neighborhood size of the ratio margin.
pub const DEFAULT_RMSS_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

/// Sentence ids with unit-normalized embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbeddingSet {
    ids: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    side: Side,
}

impl SentenceEmbeddingSet {
    pub fn new<S: Into<String>>(side: Side, dim: usize, rows: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let mut ids = Vec::with_capacity(rows.len());
        let mut seen = HashSet::new();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (id, v) in rows {
            let id = id.into();
            if v.len() != dim {
                return Err(Error::DimensionMismatch(dim, v.len()));
            }
            if !seen.insert(id.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate sentence id `{id}`")));
            }
            let u = unit(&v).ok_or_else(|| Error::ZeroVector(id.clone()))?;
            data.extend_from_slice(&u);
            ids.push(id);
        }
        Ok(SentenceEmbeddingSet { ids, data, dim, side })
    }

    /// Loads the text vector format with sentence ids in the word column.
    pub fn load(path: &Path, side: Side) -> Result<Self> {
        let (table, stats) = load_vectors(path, None)?;
        if stats.duplicates > 0 {
            return Err(Error::InvalidArgument(format!(
                "{}: {} duplicate sentence ids",
                path.display(),
                stats.duplicates
            )));
        }
        let rows = table
            .vocab()
            .iter()
            .zip(table.rows())
            .map(|(id, r)| (id.clone(), r.to_vec()))
            .collect();
        Self::new(side, table.dim(), rows)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Dense row-major score matrix, sources by targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> ScoreMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.get(i, j));
            }
        }
        ScoreMatrix {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    /// Column of the row maximum, lowest index on ties.
    pub fn argmax(&self, i: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in self.row(i).iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        best
    }
}

/// Ratio margin similarity for every source/target pair:
///
/// `cos(x, y) / (Σ_{z ∈ NN_k(x)} cos(x, z) / 2k + Σ_{z ∈ NN_k(y)} cos(y, z) / 2k)`
///
/// where `NN_k(x)` are the `k` nearest targets of source `x` and `NN_k(y)`
/// the `k` nearest sources of target `y`. Neighborhoods may contain the
/// candidate itself.
pub fn rmss(
    src: &SentenceEmbeddingSet,
    tgt: &SentenceEmbeddingSet,
    k: usize,
) -> Result<ScoreMatrix> {
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch(src.dim(), tgt.dim()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > src.len() || k > tgt.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds population ({} sources, {} targets)",
            src.len(),
            tgt.len()
        )));
    }
    let (n, m) = (src.len(), tgt.len());
    let cos: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = src.row(i);
            (0..m).map(move |j| dot(x, tgt.row(j)))
        })
        .collect();
    let src_density: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| top_k_mean(&cos[i * m..(i + 1) * m], k))
        .collect();
    let tgt_density: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = (0..n).map(|i| cos[i * m + j]).collect();
            top_k_mean(&column, k)
        })
        .collect();
    let values: Vec<f64> = cos
        .iter()
        .enumerate()
        .map(|(idx, c)| c / (src_density[idx / m] / 2.0 + tgt_density[idx % m] / 2.0))
        .collect();
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite margin for source `{}` and target `{}`",
            src.ids()[bad / m],
            tgt.ids()[bad % m]
        )));
    }
    Ok(ScoreMatrix {
        rows: n,
        cols: m,
        values,
    })
}

/// A retrieved target with its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub target: String,
    pub score: f64,
}

/// Top-1 RMSS target per source id.
pub fn rmss_top1(
    src: &SentenceEmbeddingSet,
    tgt: &SentenceEmbeddingSet,
    k: usize,
) -> Result<BTreeMap<String, Prediction>> {
    let scores = rmss(src, tgt, k)?;
    Ok((0..scores.rows)
        .filter_map(|i| {
            scores.argmax(i).map(|(j, s)| {
                (
                    src.ids()[i].clone(),
                    Prediction {
                        target: tgt.ids()[j].clone(),
                        score: s,
                    },
                )
            })
        })
        .collect())
}

/// Best target per source by Jaccard of the word-translated source against
/// the target token set; lowest index wins ties. `None` when there are no
/// targets.
pub fn jaccard_retrieve(
    src: &[TokenizedSentence],
    tgt: &[TokenizedSentence],
    lex: &Lexicon,
) -> Vec<Option<(usize, f64)>> {
    src.par_iter()
        .map(|s| best_target(&translate_tokens(s, lex), tgt))
        .collect()
}

/// Gold source-to-target alignment; one-to-one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldBitext {
    gold: HashMap<String, String>,
}

impl GoldBitext {
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut gold = HashMap::new();
        let mut targets = HashSet::new();
        for (s, t) in pairs {
            let (s, t) = (s.into(), t.into());
            if !targets.insert(t.clone()) {
                return Err(Error::InvalidArgument(format!("target `{t}` aligned twice")));
            }
            if gold.insert(s.clone(), t).is_some() {
                return Err(Error::InvalidArgument(format!("source `{s}` aligned twice")));
            }
        }
        Ok(GoldBitext { gold })
    }

    /// Reads `source-id<TAB>target-id` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in read_lines(path)?.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut f = line.split('\t');
            match (f.next(), f.next(), f.next()) {
                (Some(s), Some(t), None) => pairs.push((s.to_owned(), t.to_owned())),
                _ => return Err(Error::parse(path, i + 1, "expected `source-id<TAB>target-id`")),
            }
        }
        Self::from_pairs(pairs)
    }

    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn target_of(&self, source: &str) -> Option<&str> {
        self.gold.get(source).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(rename = "predicted")]
    pub predicted_count: usize,
    #[serde(rename = "correct")]
    pub correct_count: usize,
    #[serde(rename = "gold")]
    pub gold_count: usize,
    pub threshold: f64,
}

impl RetrievalReport {
    pub fn from_counts(predicted: usize, correct: usize, gold: usize, threshold: f64) -> Self {
        let precision = if predicted == 0 {
            0.0
        } else {
            correct as f64 / predicted as f64
        };
        let recall = if gold == 0 {
            0.0
        } else {
            correct as f64 / gold as f64
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RetrievalReport {
            precision,
            recall,
            f1,
            predicted_count: predicted,
            correct_count: correct,
            gold_count: gold,
            threshold,
        }
    }
}

impl fmt::Display for RetrievalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={:.4} R={:.4} F1={:.4} (asserted {}, correct {}, gold {}, threshold {})",
            self.precision,
            self.recall,
            self.f1,
            self.predicted_count,
            self.correct_count,
            self.gold_count,
            self.threshold
        )
    }
}

/// Asserts every prediction scoring at least `threshold` and scores the
/// asserted pairs against `gold`.
pub fn evaluate_prf(
    predictions: &BTreeMap<String, Prediction>,
    gold: &GoldBitext,
    threshold: f64,
) -> Result<RetrievalReport> {
    let mut asserted = 0;
    let mut correct = 0;
    for (source, p) in predictions {
        let Some(expected) = gold.target_of(source) else {
            return Err(Error::InvalidArgument(format!(
                "prediction for `{source}` which has no gold alignment"
            )));
        };
        if p.score >= threshold {
            asserted += 1;
            if expected == p.target {
                correct += 1;
            }
        }
    }
    Ok(RetrievalReport::from_counts(asserted, correct, gold.len(), threshold))
}

/// Reports at every distinct prediction score plus zero, ascending. Each
/// report is the best-match P/R at that cut-off.
pub fn sweep_prf(
    predictions: &BTreeMap<String, Prediction>,
    gold: &GoldBitext,
) -> Result<Vec<RetrievalReport>> {
    let mut thresholds: Vec<f64> = predictions.values().map(|p| p.score).collect();
    thresholds.push(0.0);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| evaluate_prf(predictions, gold, t))
        .collect()
}

/// `source-id<TAB>target-id<TAB>score` per prediction.
pub fn write_predictions<W: Write>(
    predictions: &BTreeMap<String, Prediction>,
    mut out: W,
) -> std::io::Result<()> {
    for (s, p) in predictions {
        writeln!(out, "{s}\t{}\t{}", p.target, p.score)?;
    }
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, Prediction>> {
    let mut out = BTreeMap::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let [s, t, score] = f[..] else {
            return Err(Error::parse(path, i + 1, "expected `source<TAB>target<TAB>score`"));
        };
        let score: f64 = score
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad score `{score}`")))?;
        out.insert(
            s.to_owned(),
            Prediction {
                target: t.to_owned(),
                score,
            },
        );
    }
    Ok(out)
}
