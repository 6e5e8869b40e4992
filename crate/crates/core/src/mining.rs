//! Dictionary-based extraction of comparable sentence pairs from linked
//! document pairs.
//!
//! Each source sentence is word-translated through the lexicon (unknown
//! words pass through unchanged) and compared with every target sentence of
//! its linked document by set Jaccard similarity. The best target is kept
//! when its score reaches the threshold.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::corpus::{read_corpus, tokenize, TokenizedSentence, TokenizerConfig};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

/// Minimum Jaccard similarity for a mined pair.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedDocumentPair {
    pub doc_id: String,
    pub src_sentences: Vec<TokenizedSentence>,
    pub tgt_sentences: Vec<TokenizedSentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinedPair {
    pub doc_id: String,
    pub src_index: usize,
    pub tgt_index: usize,
    pub src: TokenizedSentence,
    pub tgt: TokenizedSentence,
    pub score: f64,
}

/// Word-by-word translation of a sentence into a token set.
pub fn translate_tokens(sentence: &TokenizedSentence, lex: &Lexicon) -> BTreeSet<String> {
    sentence
        .tokens
        .iter()
        .map(|t| lex.get(t).unwrap_or(t).to_owned())
        .collect()
}

/// `|s ∩ t| / |s ∪ t|`, with two empty sets scoring 0.
pub fn jaccard<T: Ord>(s: &BTreeSet<T>, t: &BTreeSet<T>) -> f64 {
    let mut shared = 0usize;
    let mut left = s.iter().peekable();
    let mut right = t.iter().peekable();
    while let (Some(a), Some(b)) = (left.peek(), right.peek()) {
        match a.cmp(b) {
            std::cmp::Ordering::Less => {
                left.next();
            }
            std::cmp::Ordering::Greater => {
                right.next();
            }
            std::cmp::Ordering::Equal => {
                shared += 1;
                left.next();
                right.next();
            }
        }
    }
    let union = s.len() + t.len() - shared;
    if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    }
}

/// Index and score of the best target for a translated source set. The
/// first target wins among equal scores. `None` when there are no targets.
pub fn best_target(
    translated: &BTreeSet<String>,
    targets: &[TokenizedSentence],
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, t) in targets.iter().enumerate() {
        let score = jaccard(translated, &t.token_set);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((j, score));
        }
    }
    best
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )))
    }
}

/// Mines one linked document pair. A source sentence yields a pair when its
/// best score is positive and at least `threshold`.
pub fn mine_document(doc: &LinkedDocumentPair, lex: &Lexicon, threshold: f64) -> Vec<MinedPair> {
    doc.src_sentences
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let translated = translate_tokens(s, lex);
            let (j, score) = best_target(&translated, &doc.tgt_sentences)?;
            (score > 0.0 && score >= threshold).then(|| MinedPair {
                doc_id: doc.doc_id.clone(),
                src_index: i,
                tgt_index: j,
                src: s.clone(),
                tgt: doc.tgt_sentences[j].clone(),
                score,
            })
        })
        .collect()
}

/// Mines every document in parallel. Output is ordered by document id,
/// then source sentence index.
pub fn mine_documents(
    docs: &[LinkedDocumentPair],
    lex: &Lexicon,
    threshold: f64,
) -> Result<Vec<MinedPair>> {
    check_threshold(threshold)?;
    let mut mined: Vec<MinedPair> = docs
        .par_iter()
        .flat_map_iter(|doc| mine_document(doc, lex, threshold))
        .collect();
    mined.sort_by(|a, b| a.doc_id.cmp(&b.doc_id).then(a.src_index.cmp(&b.src_index)));
    Ok(mined)
}

#[derive(Deserialize)]
struct DocumentRecord {
    doc_id: String,
    src: Vec<String>,
    tgt: Vec<String>,
}

fn tokenize_all(lines: &[String], cfg: &TokenizerConfig) -> Vec<TokenizedSentence> {
    lines.iter().map(|l| tokenize(l, cfg)).collect()
}

/// Reads line-delimited JSON records `{doc_id, src: [..], tgt: [..]}`.
pub fn read_documents_jsonl(path: &Path, cfg: &TokenizerConfig) -> Result<Vec<LinkedDocumentPair>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DocumentRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        docs.push(LinkedDocumentPair {
            doc_id: record.doc_id,
            src_sentences: tokenize_all(&record.src, cfg),
            tgt_sentences: tokenize_all(&record.tgt, cfg),
        });
    }
    Ok(docs)
}

/// Reads a directory holding `<id>.src` / `<id>.tgt` sentence-per-line files.
/// Ids present on only one side are ignored.
pub fn read_documents_dir(dir: &Path, cfg: &TokenizerConfig) -> Result<Vec<LinkedDocumentPair>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut ids = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "src") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.insert(stem.to_owned());
            }
        }
    }
    let mut docs = Vec::new();
    for id in ids {
        let tgt_path = dir.join(format!("{id}.tgt"));
        if !tgt_path.exists() {
            continue;
        }
        docs.push(LinkedDocumentPair {
            src_sentences: read_corpus(&dir.join(format!("{id}.src")), cfg)?,
            tgt_sentences: read_corpus(&tgt_path, cfg)?,
            doc_id: id,
        });
    }
    Ok(docs)
}

/// Reads either a JSONL file or a `.src`/`.tgt` directory.
pub fn read_documents(path: &Path, cfg: &TokenizerConfig) -> Result<Vec<LinkedDocumentPair>> {
    if path.is_dir() {
        read_documents_dir(path, cfg)
    } else {
        read_documents_jsonl(path, cfg)
    }
}

fn clean_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// `doc_id<TAB>score<TAB>src_sentence<TAB>tgt_sentence` per pair.
pub fn write_mined_tsv<W: Write>(pairs: &[MinedPair], mut out: W) -> std::io::Result<()> {
    for p in pairs {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            clean_field(&p.doc_id),
            p.score,
            clean_field(&p.src.raw),
            clean_field(&p.tgt.raw)
        )?;
    }
    Ok(())
}

/// Line-aligned source and target text, one sentence per line.
pub fn write_parallel<W1: Write, W2: Write>(
    pairs: &[MinedPair],
    mut src_out: W1,
    mut tgt_out: W2,
) -> std::io::Result<()> {
    for p in pairs {
        writeln!(src_out, "{}", clean_field(&p.src.raw))?;
        writeln!(tgt_out, "{}", clean_field(&p.tgt.raw))?;
    }
    Ok(())
}
