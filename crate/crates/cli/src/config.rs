//! Pipeline configuration. Resolution order is command-line flag, then the
//! JSON config file, then the built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use lexmine::codeswitch::{Direction, DEFAULT_MAX_RATIO, DEFAULT_MIN_RATIO};
use lexmine::corpus::TokenizerConfig;
use lexmine::embeddings::{DEFAULT_CSLS_K, DEFAULT_FREQUENT_WORD_CAP};
use lexmine::lingmetrics::DEFAULT_OVERLAP_MERGES;
use lexmine::mining::DEFAULT_THRESHOLD;
use lexmine::retrieval_eval::DEFAULT_RMSS_K;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LEXMINE_OUT_DIR";
pub const FALLBACK_OUT_DIR: &str = "lexmine-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub tokenizer: TokenizerConfig,
    pub induce: InduceConfig,
    pub mine: MineConfig,
    pub codeswitch: CodeswitchConfig,
    pub eval_retrieval: EvalRetrievalConfig,
    pub rmss: RmssConfig,
    pub metrics: MetricsConfig,
    pub codelength: CodelengthConfig,
    pub bpe_learn: BpeLearnConfig,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InduceConfig {
    pub src_vectors: Option<PathBuf>,
    pub tgt_vectors: Option<PathBuf>,
    pub seed_lexicon: Option<PathBuf>,
    /// Source corpus used to rank words by frequency. Without it, words are
    /// ranked by their order in the source vector file.
    pub src_corpus: Option<PathBuf>,
    /// Read at most this many rows from each vector file.
    pub max_vectors: Option<usize>,
    pub cap: usize,
    pub csls_k: usize,
}

impl Default for InduceConfig {
    fn default() -> Self {
        InduceConfig {
            src_vectors: None,
            tgt_vectors: None,
            seed_lexicon: None,
            src_corpus: None,
            max_vectors: None,
            cap: DEFAULT_FREQUENT_WORD_CAP,
            csls_k: DEFAULT_CSLS_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MineConfig {
    /// JSONL file or directory of `<id>.src` / `<id>.tgt` files.
    pub documents: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub threshold: f64,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            documents: None,
            lexicon: None,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeswitchConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub seed: u64,
    pub direction: Direction,
}

impl Default for CodeswitchConfig {
    fn default() -> Self {
        CodeswitchConfig {
            corpus: None,
            lexicon: None,
            min_ratio: DEFAULT_MIN_RATIO,
            max_ratio: DEFAULT_MAX_RATIO,
            seed: 0,
            direction: Direction::SrcToTgt,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMethod {
    /// Score an existing predictions TSV.
    #[default]
    Predictions,
    /// Dictionary translation plus Jaccard over sentence files.
    Jaccard,
    /// Ratio-margin retrieval over sentence embeddings.
    Rmss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalRetrievalConfig {
    pub method: RetrievalMethod,
    pub gold: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub src: Option<PathBuf>,
    pub tgt: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub src_embeddings: Option<PathBuf>,
    pub tgt_embeddings: Option<PathBuf>,
    pub k: usize,
    pub threshold: f64,
    pub sweep: bool,
}

impl Default for EvalRetrievalConfig {
    fn default() -> Self {
        EvalRetrievalConfig {
            method: RetrievalMethod::Predictions,
            gold: None,
            predictions: None,
            src: None,
            tgt: None,
            lexicon: None,
            src_embeddings: None,
            tgt_embeddings: None,
            k: DEFAULT_RMSS_K,
            threshold: 0.0,
            sweep: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmssConfig {
    pub src_embeddings: Option<PathBuf>,
    pub tgt_embeddings: Option<PathBuf>,
    pub k: usize,
    /// Also write the full score matrix.
    pub matrix: bool,
}

impl Default for RmssConfig {
    fn default() -> Self {
        RmssConfig {
            src_embeddings: None,
            tgt_embeddings: None,
            k: DEFAULT_RMSS_K,
            matrix: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub features_a: Option<PathBuf>,
    pub features_b: Option<PathBuf>,
    pub corpus_a: Option<PathBuf>,
    pub corpus_b: Option<PathBuf>,
    pub merges: usize,
    pub wals: Option<PathBuf>,
    pub lang_a: Option<String>,
    pub lang_b: Option<String>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            features_a: None,
            features_b: None,
            corpus_a: None,
            corpus_b: None,
            merges: DEFAULT_OVERLAP_MERGES,
            wals: None,
            lang_a: None,
            lang_b: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodelengthConfig {
    pub loss_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpeLearnConfig {
    pub corpus: Option<PathBuf>,
    pub merges: usize,
}

impl Default for BpeLearnConfig {
    fn default() -> Self {
        BpeLearnConfig {
            corpus: None,
            merges: DEFAULT_OVERLAP_MERGES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub words: usize,
    pub dim: usize,
    pub noise: f64,
    pub seed_pairs: usize,
    pub documents: usize,
    pub mono_sentences: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let w = lexmine::synthetic::WorldConfig::default();
        SynthConfig {
            seed: w.seed,
            words: w.num_words,
            dim: w.dim,
            noise: w.noise,
            seed_pairs: w.seed_pairs,
            documents: w.num_docs,
            mono_sentences: w.mono_sentences,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::new("io", format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Flag, then config file, then `$LEXMINE_OUT_DIR`, then `lexmine-out`.
    pub fn resolve_out_dir(&mut self, flag: Option<PathBuf>) -> PathBuf {
        let dir = flag
            .or_else(|| self.out_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR));
        self.out_dir = Some(dir.clone());
        dir
    }
}
