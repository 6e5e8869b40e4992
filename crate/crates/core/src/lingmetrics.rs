//! Language-pair similarity metrics and online codelength.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{learn_bpe, TokenizedSentence};
use crate::error::{Error, Result};
use crate::mining::jaccard;

/// Per-language merge count for BPE token overlap.
pub const DEFAULT_OVERLAP_MERGES: usize = 8000;

/// Typological feature vector; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub language: String,
    pub features: Vec<Option<f64>>,
}

impl FeatureVector {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Cosine distance over the coordinates present in both vectors.
pub fn syntactic_distance(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.features.len() != b.features.len() {
        return Err(Error::DimensionMismatch(a.features.len(), b.features.len()));
    }
    let (mut ab, mut aa, mut bb, mut shared) = (0.0, 0.0, 0.0, 0usize);
    for (x, y) in a.features.iter().zip(&b.features) {
        if let (Some(x), Some(y)) = (x, y) {
            ab += x * y;
            aa += x * x;
            bb += y * y;
            shared += 1;
        }
    }
    if shared == 0 {
        return Err(Error::InvalidArgument(format!(
            "{} and {} share no non-missing features",
            a.language, b.language
        )));
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroVector(format!(
            "masked features of {} / {}",
            a.language, b.language
        )));
    }
    Ok(1.0 - ab / (aa.sqrt() * bb.sqrt()))
}

fn char_set<'a, I>(corpus: I) -> BTreeSet<char>
where
    I: IntoIterator<Item = &'a str>,
{
    corpus
        .into_iter()
        .flat_map(str::chars)
        .filter(|c| !c.is_whitespace())
        .collect()
}

/// Jaccard of the distinct non-whitespace characters of two corpora.
pub fn char_overlap<'a, A, B>(corpus_a: A, corpus_b: B) -> f64
where
    A: IntoIterator<Item = &'a str>,
    B: IntoIterator<Item = &'a str>,
{
    jaccard(&char_set(corpus_a), &char_set(corpus_b))
}

/// Jaccard of the BPE symbol inventories learned separately on each corpus.
pub fn token_overlap(
    corpus_a: &[TokenizedSentence],
    corpus_b: &[TokenizedSentence],
    num_merges: usize,
) -> Result<f64> {
    let (a, b) = rayon::join(
        || learn_bpe(corpus_a, num_merges),
        || learn_bpe(corpus_b, num_merges),
    );
    Ok(jaccard(a?.vocab(), b?.vocab()))
}

/// Categorical WALS feature values of one language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypologyTable {
    pub language: String,
    pub wals: BTreeMap<String, String>,
}

impl TypologyTable {
    pub fn new(language: impl Into<String>) -> Self {
        TypologyTable {
            language: language.into(),
            wals: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.wals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wals.is_empty()
    }
}

/// Reads a `language,feature_id,value` CSV (with header) into one table per
/// language.
pub fn load_wals(path: &Path) -> Result<BTreeMap<String, TypologyTable>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let mut tables: BTreeMap<String, TypologyTable> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        let (Some(lang), Some(feature), Some(value)) = (record.get(0), record.get(1), record.get(2))
        else {
            return Err(Error::parse(path, i + 2, "expected `language,feature_id,value`"));
        };
        tables
            .entry(lang.to_owned())
            .or_insert_with(|| TypologyTable::new(lang))
            .wals
            .insert(feature.to_owned(), value.to_owned());
    }
    Ok(tables)
}

/// Number of features documented for both languages with the same value.
pub fn shared_wals(a: &TypologyTable, b: &TypologyTable) -> usize {
    a.wals
        .iter()
        .filter(|(feature, value)| b.wals.get(*feature) == Some(*value))
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetLoss {
    pub size: usize,
    /// Summed log-loss in bits of the model trained on the previous subset,
    /// evaluated on the examples new to this one.
    pub loss_bits: f64,
}

/// Per-subset losses of a model retrained on growing data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossLog {
    pub num_classes: u64,
    /// Prediction targets (tokens) in the first subset.
    pub first_subset_tokens: u64,
    pub subsets: Vec<SubsetLoss>,
}

impl LossLog {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidArgument("num_classes must be at least 2".into()));
        }
        if self.subsets.is_empty() {
            return Err(Error::InvalidArgument("loss log has no subsets".into()));
        }
        for w in self.subsets.windows(2) {
            if w[1].size <= w[0].size {
                return Err(Error::InvalidArgument(format!(
                    "subset sizes must increase strictly ({} then {})",
                    w[0].size, w[1].size
                )));
            }
        }
        if let Some(s) = self.subsets.iter().find(|s| !s.loss_bits.is_finite() || s.loss_bits < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid loss {} for subset of size {}",
                s.loss_bits, s.size
            )));
        }
        Ok(())
    }

    /// Uniform-code cost of the first subset.
    pub fn initial_bits(&self) -> f64 {
        self.first_subset_tokens as f64 * (self.num_classes as f64).log2()
    }
}

/// Online codelength in bits: the first subset coded uniformly over the
/// classes, then each later subset coded by the model trained on the one
/// before it.
pub fn online_codelength(log: &LossLog) -> Result<f64> {
    log.validate()?;
    let rest: f64 = log.subsets.iter().skip(1).map(|s| s.loss_bits).sum();
    Ok(log.initial_bits() + rest)
}
