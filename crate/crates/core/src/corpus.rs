//! Corpus ingestion: normalization, tokenization, frequency counts and
//! byte-pair-encoding vocabularies.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Marker appended to the final symbol of every word during BPE.
pub const END_OF_WORD: &str = "</w>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub nfc: bool,
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            nfc: true,
            lowercase: true,
        }
    }
}

/// A line of text together with its normalized token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedSentence {
    pub raw: String,
    pub tokens: Vec<String>,
    pub token_set: BTreeSet<String>,
}

impl TokenizedSentence {
    /// Builds a sentence from already-normalized tokens; `raw` is their
    /// space-joined form. Empty tokens are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens
            .into_iter()
            .map(Into::into)
            .filter(|t| !t.is_empty())
            .collect();
        let token_set = tokens.iter().cloned().collect();
        TokenizedSentence {
            raw: tokens.join(" "),
            tokens,
            token_set,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

fn normalize(raw: &str, config: &TokenizerConfig) -> String {
    let mut text: String = if config.nfc {
        raw.nfc().collect()
    } else {
        raw.to_owned()
    };
    if config.lowercase {
        text = text.to_lowercase();
        // lowercasing can produce decomposed sequences (e.g. U+0130)
        if config.nfc {
            text = text.nfc().collect();
        }
    }
    text
}

/// Normalizes and splits a line into tokens.
///
/// NFC, lowercase, split on Unicode whitespace, strip leading and trailing
/// punctuation from each token, drop empties.
pub fn tokenize(raw: &str, config: &TokenizerConfig) -> TokenizedSentence {
    let normalized = normalize(raw, config);
    let tokens: Vec<String> = normalized
        .split_whitespace()
        .map(|t| t.trim_matches(is_punctuation))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    let token_set = tokens.iter().cloned().collect();
    TokenizedSentence {
        raw: raw.to_owned(),
        tokens,
        token_set,
    }
}

/// Like [`tokenize`] but starting from raw bytes.
pub fn tokenize_bytes(raw: &[u8], config: &TokenizerConfig) -> Result<TokenizedSentence> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(tokenize(text, config))
}

/// Reads a UTF-8 file as lines of text. A decode error reports the byte
/// offset within the file.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Decode {
        offset: e.utf8_error().valid_up_to(),
    })?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Reads a one-sentence-per-line corpus file and tokenizes every line.
pub fn read_corpus(path: &Path, config: &TokenizerConfig) -> Result<Vec<TokenizedSentence>> {
    Ok(read_lines(path)?
        .iter()
        .map(|line| tokenize(line, config))
        .collect())
}

/// Exact token multiplicities over a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_token(&mut self, token: &str) {
        self.add_count(token, 1);
    }

    fn add_count(&mut self, token: &str, count: u64) {
        if count == 0 {
            return;
        }
        match self.counts.get_mut(token) {
            Some(c) => *c += count,
            None => {
                self.counts.insert(token.to_owned(), count);
            }
        }
        self.total += count;
    }

    pub fn add_sentence(&mut self, sentence: &TokenizedSentence) {
        for token in &sentence.tokens {
            self.add_token(token);
        }
    }

    /// Folds another table into this one. Merging is associative, so
    /// shards can be counted independently.
    pub fn merge(&mut self, other: &FrequencyTable) {
        for (token, &count) in &other.counts {
            self.add_count(token, count);
        }
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// All tokens ordered by descending count, ties broken lexicographically.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut all: Vec<(&str, u64)> = self.iter().collect();
        all.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        all
    }

    /// The `n` most frequent tokens, ties broken lexicographically.
    pub fn top_k(&self, n: usize) -> Vec<&str> {
        self.ranked().into_iter().take(n).map(|(t, _)| t).collect()
    }
}

impl<'a> FromIterator<&'a TokenizedSentence> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = &'a TokenizedSentence>>(iter: I) -> Self {
        let mut table = FrequencyTable::new();
        for sentence in iter {
            table.add_sentence(sentence);
        }
        table
    }
}

pub fn count_frequencies<'a, I>(corpus: I) -> FrequencyTable
where
    I: IntoIterator<Item = &'a TokenizedSentence>,
{
    corpus.into_iter().collect()
}

/// Ordered BPE merges and the symbol inventory they produce.
#[derive(Debug, Clone)]
pub struct BpeVocabulary {
    merges: Vec<(String, String)>,
    vocab: BTreeSet<String>,
    ranks: HashMap<(String, String), usize>,
}

impl PartialEq for BpeVocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.merges == other.merges && self.vocab == other.vocab
    }
}

impl BpeVocabulary {
    fn new(merges: Vec<(String, String)>, vocab: BTreeSet<String>) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, pair)| (pair.clone(), i))
            .collect();
        BpeVocabulary {
            merges,
            vocab,
            ranks,
        }
    }

    /// Rebuilds a vocabulary from a merge list alone. The symbol set is the
    /// merge operands plus their products; characters never involved in a
    /// merge are not recoverable from merges.
    pub fn from_merges(merges: Vec<(String, String)>) -> Self {
        let mut vocab = BTreeSet::new();
        for (a, b) in &merges {
            vocab.insert(a.clone());
            vocab.insert(b.clone());
            vocab.insert(format!("{a}{b}"));
        }
        Self::new(merges, vocab)
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn num_merges(&self) -> usize {
        self.merges.len()
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.vocab.contains(symbol)
    }

    /// Writes merges one per line as `symbol1 symbol2`, preceded by the
    /// customary `#version` line.
    pub fn write_merges<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#version: 0.2")?;
        for (a, b) in &self.merges {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }

    pub fn read_merges(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut merges = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.starts_with("#version") || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    merges.push((a.to_owned(), b.to_owned()))
                }
                _ => return Err(Error::parse(path, i + 1, "expected `symbol1 symbol2`")),
            }
        }
        Ok(Self::from_merges(merges))
    }

    /// Segments a word by applying the learned merges in order.
    pub fn apply(&self, word: &str) -> Vec<String> {
        let mut symbols = initial_symbols(word);
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (a, b) = &self.merges[rank];
            symbols = merge_pair(&symbols, a, b);
        }
        symbols
    }
}

/// Character segmentation with the end-of-word marker on the last symbol.
pub fn initial_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(END_OF_WORD);
    }
    symbols
}

/// Replaces every non-overlapping occurrence of `(a, b)`, scanning left to right.
fn merge_pair(symbols: &[String], a: &str, b: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == a && symbols[i + 1] == b {
            out.push(format!("{a}{b}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

pub fn apply_bpe(word: &str, vocab: &BpeVocabulary) -> Vec<String> {
    vocab.apply(word)
}

/// Joins BPE symbols back into the surface word.
pub fn join_symbols(symbols: &[String]) -> String {
    let mut word: String = symbols.concat();
    if word.ends_with(END_OF_WORD) {
        word.truncate(word.len() - END_OF_WORD.len());
    }
    word
}

#[derive(Debug, PartialEq, Eq)]
struct PairCandidate {
    count: u64,
    pair: Reverse<(String, String)>,
    ids: (u32, u32),
}

impl Ord for PairCandidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| self.pair.cmp(&other.pair))
            .then_with(|| self.ids.cmp(&other.ids))
    }
}

impl PartialOrd for PairCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    symbols: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(s.to_owned());
        self.ids.insert(s.to_owned(), id);
        id
    }

    fn get(&self, id: u32) -> &str {
        &self.symbols[id as usize]
    }
}

/// Learns `num_merges` BPE merges from a tokenized corpus.
pub fn learn_bpe<'a, I>(corpus: I, num_merges: usize) -> Result<BpeVocabulary>
where
    I: IntoIterator<Item = &'a TokenizedSentence>,
{
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in corpus {
        for token in &sentence.tokens {
            *counts.entry(token.as_str()).or_default() += 1;
        }
    }
    learn_bpe_from_counts(counts, num_merges)
}

/// Learns merges from word counts. Each step merges the most frequent
/// adjacent pair (lexicographically smallest on ties) and stops early once
/// no pair occurs at least twice.
pub fn learn_bpe_from_counts<'a, I>(word_counts: I, num_merges: usize) -> Result<BpeVocabulary>
where
    I: IntoIterator<Item = (&'a str, u64)>,
{
    let mut interner = Interner::default();
    let mut words: Vec<(Vec<u32>, u64)> = Vec::new();
    let mut vocab = BTreeSet::new();
    for (word, count) in word_counts {
        if word.is_empty() || count == 0 {
            continue;
        }
        let symbols = initial_symbols(word);
        vocab.extend(symbols.iter().cloned());
        words.push((symbols.iter().map(|s| interner.intern(s)).collect(), count));
    }
    if words.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut occurrences: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (idx, (symbols, count)) in words.iter().enumerate() {
        for w in symbols.windows(2) {
            *pair_counts.entry((w[0], w[1])).or_default() += count;
            occurrences.entry((w[0], w[1])).or_default().push(idx);
        }
    }

    let candidate = |interner: &Interner, ids: (u32, u32), count: u64| PairCandidate {
        count,
        pair: Reverse((interner.get(ids.0).to_owned(), interner.get(ids.1).to_owned())),
        ids,
    };
    let mut heap: BinaryHeap<PairCandidate> = pair_counts
        .iter()
        .map(|(&ids, &count)| candidate(&interner, ids, count))
        .collect();

    let mut merges = Vec::with_capacity(num_merges);
    while merges.len() < num_merges {
        let Some(top) = heap.pop() else { break };
        if pair_counts.get(&top.ids).copied() != Some(top.count) {
            continue;
        }
        if top.count < 2 {
            break;
        }
        let (a, b) = top.ids;
        let Reverse((a_str, b_str)) = top.pair;
        let merged = interner.intern(&format!("{a_str}{b_str}"));
        vocab.insert(format!("{a_str}{b_str}"));
        merges.push((a_str, b_str));

        let mut affected = occurrences.remove(&top.ids).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        let mut touched: HashSet<(u32, u32)> = HashSet::new();
        for idx in affected {
            let (symbols, count) = &mut words[idx];
            if !symbols.windows(2).any(|w| w[0] == a && w[1] == b) {
                continue;
            }
            for w in symbols.windows(2) {
                let key = (w[0], w[1]);
                if let Some(c) = pair_counts.get_mut(&key) {
                    *c -= *count;
                }
                touched.insert(key);
            }
            let mut next = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == a && symbols[i + 1] == b {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(symbols[i]);
                    i += 1;
                }
            }
            *symbols = next;
            for w in symbols.windows(2) {
                let key = (w[0], w[1]);
                *pair_counts.entry(key).or_default() += *count;
                occurrences.entry(key).or_default().push(idx);
                touched.insert(key);
            }
        }
        pair_counts.remove(&(a, b));
        touched.remove(&(a, b));
        for key in touched {
            match pair_counts.get(&key).copied() {
                Some(0) => {
                    pair_counts.remove(&key);
                }
                Some(count) => heap.push(candidate(&interner, key, count)),
                None => {}
            }
        }
    }

    Ok(BpeVocabulary::new(merges, vocab))
}
