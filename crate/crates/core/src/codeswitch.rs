//! Code-switched corpus generation by dictionary word replacement.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedSentence;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

pub const DEFAULT_MIN_RATIO: f64 = 0.20;
pub const DEFAULT_MAX_RATIO: f64 = 0.50;

const RATIO_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Direction {
    #[default]
    #[serde(rename = "src2tgt")]
    SrcToTgt,
    #[serde(rename = "tgt2src")]
    TgtToSrc,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::SrcToTgt => f.write_str("src2tgt"),
            Direction::TgtToSrc => f.write_str("tgt2src"),
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "src2tgt" => Ok(Direction::SrcToTgt),
            "tgt2src" => Ok(Direction::TgtToSrc),
            other => Err(Error::InvalidArgument(format!(
                "direction must be `src2tgt` or `tgt2src`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeSwitchConfig {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub rng_seed: u64,
    pub direction: Direction,
}

impl Default for CodeSwitchConfig {
    fn default() -> Self {
        CodeSwitchConfig {
            min_ratio: DEFAULT_MIN_RATIO,
            max_ratio: DEFAULT_MAX_RATIO,
            rng_seed: 0,
            direction: Direction::SrcToTgt,
        }
    }
}

impl CodeSwitchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_ratio > 0.0 && self.min_ratio <= self.max_ratio && self.max_ratio <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "ratios must satisfy 0 < min ({}) <= max ({}) <= 1",
                self.min_ratio, self.max_ratio
            )))
        }
    }

    /// The lexicon to replace with: `lex` itself for src2tgt, its inverse
    /// for tgt2src.
    pub fn oriented(&self, lex: &Lexicon) -> Lexicon {
        match self.direction {
            Direction::SrcToTgt => lex.clone(),
            Direction::TgtToSrc => lex.invert(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeSwitched {
    pub sentence: TokenizedSentence,
    /// Replaced token positions, ascending.
    pub replaced: Vec<usize>,
}

impl CodeSwitched {
    pub fn ratio(&self) -> f64 {
        self.replaced.len() as f64 / self.sentence.len() as f64
    }
}

/// Replaces a random share of dictionary-covered tokens.
///
/// A target ratio is drawn uniformly from `[min_ratio, max_ratio]` and
/// rounded to a token count, clamped to the counts that stay inside the band
/// when the band contains one. Returns `None` when that count is zero or when
/// the covered positions cannot reach `min_ratio`.
pub fn codeswitch_sentence<R: Rng + ?Sized>(
    sentence: &TokenizedSentence,
    lex: &Lexicon,
    cfg: &CodeSwitchConfig,
    rng: &mut R,
) -> Option<CodeSwitched> {
    let n = sentence.len();
    if n == 0 {
        return None;
    }
    let covered: Vec<usize> = (0..n).filter(|&i| lex.contains(&sentence.tokens[i])).collect();
    let ratio = if cfg.min_ratio < cfg.max_ratio {
        rng.gen_range(cfg.min_ratio..=cfg.max_ratio)
    } else {
        cfg.min_ratio
    };
    let lo = (cfg.min_ratio * n as f64 - RATIO_EPS).ceil() as usize;
    let hi = (cfg.max_ratio * n as f64 + RATIO_EPS).floor() as usize;
    let mut count = (ratio * n as f64).round() as usize;
    if lo <= hi {
        count = count.clamp(lo, hi);
    }
    if count == 0 || (covered.len() as f64) < cfg.min_ratio * n as f64 - RATIO_EPS {
        return None;
    }
    let count = count.min(covered.len());

    let mut replaced: Vec<usize> = sample(rng, covered.len(), count)
        .into_iter()
        .map(|i| covered[i])
        .collect();
    replaced.sort_unstable();
    let mut tokens = sentence.tokens.clone();
    for &i in &replaced {
        if let Some(t) = lex.get(&tokens[i]) {
            tokens[i] = t.to_owned();
        }
    }
    Some(CodeSwitched {
        sentence: TokenizedSentence::from_tokens(tokens),
        replaced,
    })
}

/// Per-line generator derived from the seed and the line index.
pub fn line_rng(seed: u64, line: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(line);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CodeSwitchStats {
    pub emitted: usize,
    pub skipped: usize,
    pub mean_ratio: f64,
}

/// Code-switches every line; output keeps corpus order and does not depend
/// on how the work is scheduled.
pub fn codeswitch_corpus(
    corpus: &[TokenizedSentence],
    lex: &Lexicon,
    cfg: &CodeSwitchConfig,
) -> Result<(Vec<CodeSwitched>, CodeSwitchStats)> {
    cfg.validate()?;
    let results: Vec<Option<CodeSwitched>> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, s)| codeswitch_sentence(s, lex, cfg, &mut line_rng(cfg.rng_seed, i as u64)))
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let emitted: Vec<CodeSwitched> = results.into_iter().flatten().collect();
    let mean_ratio = if emitted.is_empty() {
        0.0
    } else {
        emitted.iter().map(CodeSwitched::ratio).sum::<f64>() / emitted.len() as f64
    };
    let stats = CodeSwitchStats {
        emitted: emitted.len(),
        skipped,
        mean_ratio,
    };
    Ok((emitted, stats))
}
