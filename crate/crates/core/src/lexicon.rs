//! Top-1 bilingual word lexicons and their TSV form.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_lines, tokenize, TokenizerConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Seed,
    Projected,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Seed => f.write_str("seed"),
            Provenance::Projected => f.write_str("projected"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seed" => Ok(Provenance::Seed),
            "projected" => Ok(Provenance::Projected),
            other => Err(Error::InvalidArgument(format!("unknown provenance `{other}`"))),
        }
    }
}

/// Source word to single target word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, String>,
    provenance: Provenance,
}

impl Lexicon {
    pub fn new(provenance: Provenance) -> Self {
        Lexicon {
            entries: HashMap::new(),
            provenance,
        }
    }

    /// Builds a top-1 lexicon; the first translation seen for a source wins.
    pub fn from_pairs<I, S, T>(pairs: I, provenance: Provenance) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut lexicon = Lexicon::new(provenance);
        for (s, t) in pairs {
            lexicon.entries.entry(s.into()).or_insert_with(|| t.into());
        }
        lexicon
    }

    /// Inserts or replaces the translation of `source`.
    pub fn insert(&mut self, source: impl Into<String>, target: impl Into<String>) {
        self.entries.insert(source.into(), target.into());
    }

    pub fn get(&self, source: &str) -> Option<&str> {
        self.entries.get(source).map(String::as_str)
    }

    pub fn contains(&self, source: &str) -> bool {
        self.entries.contains_key(source)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Entries sorted by source word.
    pub fn sorted(&self) -> Vec<(&str, &str)> {
        let mut all: Vec<(&str, &str)> = self
            .entries
            .iter()
            .map(|(s, t)| (s.as_str(), t.as_str()))
            .collect();
        all.sort_unstable();
        all
    }

    /// Target to source. When several sources share a target, the
    /// lexicographically smallest source is kept.
    pub fn invert(&self) -> Lexicon {
        let mut inverted: BTreeMap<&str, &str> = BTreeMap::new();
        for (s, t) in self.sorted() {
            inverted.entry(t).or_insert(s);
        }
        Lexicon::from_pairs(inverted, self.provenance)
    }

    /// Writes `# provenance: <p>` followed by `source<TAB>target` lines
    /// sorted by source.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# provenance: {}", self.provenance)?;
        for (s, t) in self.sorted() {
            writeln!(out, "{s}\t{t}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Reads a lexicon TSV. Without a provenance header the lexicon is
    /// treated as a seed dictionary.
    pub fn load(path: &Path, normalizer: Option<&TokenizerConfig>) -> Result<Lexicon> {
        let (pairs, provenance) = read_pairs(path, normalizer)?;
        Ok(Lexicon::from_pairs(
            pairs,
            provenance.unwrap_or(Provenance::Seed),
        ))
    }
}

fn normalize_entry(entry: &str, normalizer: Option<&TokenizerConfig>) -> String {
    match normalizer {
        Some(cfg) => tokenize(entry, cfg).tokens.join(" "),
        None => entry.trim().to_owned(),
    }
}

/// Pairs in file order plus the provenance header, if any.
pub type PairList = (Vec<(String, String)>, Option<Provenance>);

/// Reads every `source<TAB>target` pair of a TSV, keeping duplicates and
/// multiple translations per source in file order. Entries that normalize
/// to nothing are dropped.
pub fn read_pairs(
    path: &Path,
    normalizer: Option<&TokenizerConfig>,
) -> Result<PairList> {
    let mut pairs = Vec::new();
    let mut provenance = None;
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(p) = comment.trim().strip_prefix("provenance:") {
                provenance = Some(p.trim().parse()?);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(s), Some(t)) = (fields.next(), fields.next()) else {
            return Err(Error::parse(path, i + 1, "expected `source<TAB>target`"));
        };
        let s = normalize_entry(s, normalizer);
        let t = normalize_entry(t, normalizer);
        if !s.is_empty() && !t.is_empty() {
            pairs.push((s, t));
        }
    }
    Ok((pairs, provenance))
}
