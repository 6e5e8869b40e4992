//! `lexmine`: command-line front end for the pipeline. Every run writes its
//! artifacts plus a `<subcommand>.manifest.json` into the output directory.

mod commands;
mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use lexmine::codeswitch::Direction;
use serde_json::json;

use config::{PipelineConfig, RetrievalMethod};
use manifest::{config_hash, file_record, Manifest, SCHEMA_VERSION};

/// Error reported as one JSON line on stderr.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<lexmine::Error> for Failure {
    fn from(e: lexmine::Error) -> Self {
        Failure::new(e.kind(), e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "lexmine", version, about = "Lexicon induction, sentence mining and code-switch augmentation")]
struct Cli {
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $LEXMINE_OUT_DIR, else ./lexmine-out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the effective config as JSON and exit without running.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an orthogonal map on a seed lexicon and induce a lexicon with CSLS.
    Induce(InduceArgs),
    /// Mine comparable sentence pairs from linked documents.
    Mine(MineArgs),
    /// Replace a random share of words with dictionary translations.
    Codeswitch(CodeswitchArgs),
    /// Precision, recall and F1 of sentence retrieval against a gold bitext.
    EvalRetrieval(EvalArgs),
    /// Ratio-margin similarity between two sentence-embedding files.
    Rmss(RmssArgs),
    /// Linguistic similarity between two languages.
    Metrics(MetricsArgs),
    /// Online codelength of a training loss log.
    Codelength(CodelengthArgs),
    /// Learn BPE merges on a corpus.
    BpeLearn(BpeArgs),
    /// Write a synthetic bilingual fixture with a planted alignment.
    Synth(SynthArgs),
    /// Re-run a recorded manifest and check the artifacts match.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct InduceArgs {
    #[arg(long)]
    src_vectors: Option<PathBuf>,
    #[arg(long)]
    tgt_vectors: Option<PathBuf>,
    #[arg(long)]
    seed_lexicon: Option<PathBuf>,
    /// Corpus used to rank source words by frequency.
    #[arg(long)]
    src_corpus: Option<PathBuf>,
    /// Read at most this many vectors per file.
    #[arg(long)]
    max_vectors: Option<usize>,
    /// Translate only the most frequent source words [default: 200000].
    #[arg(long)]
    cap: Option<usize>,
    /// Neighbourhood size for CSLS [default: 10].
    #[arg(long)]
    csls_k: Option<usize>,
}

#[derive(Args)]
struct MineArgs {
    /// JSONL file or directory of <id>.src / <id>.tgt files.
    #[arg(long)]
    documents: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Minimum Jaccard score [default: 0.1].
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct CodeswitchArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// [default: 0.2]
    #[arg(long)]
    min_ratio: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    max_ratio: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// src2tgt or tgt2src [default: src2tgt].
    #[arg(long)]
    direction: Option<Direction>,
}

#[derive(Args)]
struct EvalArgs {
    /// [default: predictions]
    #[arg(long, value_enum)]
    method: Option<RetrievalMethod>,
    /// Gold TSV `source-id<TAB>target-id`.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Predictions TSV `source-id<TAB>target-id<TAB>score`.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Source sentences, one per line; ids are 0-based line numbers.
    #[arg(long)]
    src: Option<PathBuf>,
    #[arg(long)]
    tgt: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    src_embeddings: Option<PathBuf>,
    #[arg(long)]
    tgt_embeddings: Option<PathBuf>,
    /// [default: 4]
    #[arg(long)]
    k: Option<usize>,
    /// Assert predictions scoring at least this [default: 0].
    #[arg(long)]
    threshold: Option<f64>,
    /// Also report at every distinct score.
    #[arg(long)]
    sweep: bool,
}

#[derive(Args)]
struct RmssArgs {
    #[arg(long)]
    src_embeddings: Option<PathBuf>,
    #[arg(long)]
    tgt_embeddings: Option<PathBuf>,
    /// [default: 4]
    #[arg(long)]
    k: Option<usize>,
    /// Also write the full score matrix.
    #[arg(long)]
    matrix: bool,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    features_a: Option<PathBuf>,
    #[arg(long)]
    features_b: Option<PathBuf>,
    #[arg(long)]
    corpus_a: Option<PathBuf>,
    #[arg(long)]
    corpus_b: Option<PathBuf>,
    /// BPE merges per language for token overlap [default: 8000].
    #[arg(long)]
    merges: Option<usize>,
    /// CSV `language,feature_id,value`.
    #[arg(long)]
    wals: Option<PathBuf>,
    #[arg(long)]
    lang_a: Option<String>,
    #[arg(long)]
    lang_b: Option<String>,
}

#[derive(Args)]
struct CodelengthArgs {
    #[arg(long)]
    loss_log: Option<PathBuf>,
}

#[derive(Args)]
struct BpeArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// [default: 8000]
    #[arg(long)]
    merges: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    words: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed_pairs: Option<usize>,
    #[arg(long)]
    documents: Option<usize>,
    #[arg(long)]
    mono_sentences: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

/// Overlays subcommand flags onto the config; returns the subcommand name.
fn apply_flags(command: Command, cfg: &mut PipelineConfig) -> &'static str {
    match command {
        Command::Induce(a) => {
            let c = &mut cfg.induce;
            set_opt(&mut c.src_vectors, a.src_vectors);
            set_opt(&mut c.tgt_vectors, a.tgt_vectors);
            set_opt(&mut c.seed_lexicon, a.seed_lexicon);
            set_opt(&mut c.src_corpus, a.src_corpus);
            set_opt(&mut c.max_vectors, a.max_vectors);
            set(&mut c.cap, a.cap);
            set(&mut c.csls_k, a.csls_k);
            "induce"
        }
        Command::Mine(a) => {
            let c = &mut cfg.mine;
            set_opt(&mut c.documents, a.documents);
            set_opt(&mut c.lexicon, a.lexicon);
            set(&mut c.threshold, a.threshold);
            "mine"
        }
        Command::Codeswitch(a) => {
            let c = &mut cfg.codeswitch;
            set_opt(&mut c.corpus, a.corpus);
            set_opt(&mut c.lexicon, a.lexicon);
            set(&mut c.min_ratio, a.min_ratio);
            set(&mut c.max_ratio, a.max_ratio);
            set(&mut c.seed, a.seed);
            set(&mut c.direction, a.direction);
            "codeswitch"
        }
        Command::EvalRetrieval(a) => {
            let c = &mut cfg.eval_retrieval;
            set(&mut c.method, a.method);
            set_opt(&mut c.gold, a.gold);
            set_opt(&mut c.predictions, a.predictions);
            set_opt(&mut c.src, a.src);
            set_opt(&mut c.tgt, a.tgt);
            set_opt(&mut c.lexicon, a.lexicon);
            set_opt(&mut c.src_embeddings, a.src_embeddings);
            set_opt(&mut c.tgt_embeddings, a.tgt_embeddings);
            set(&mut c.k, a.k);
            set(&mut c.threshold, a.threshold);
            c.sweep |= a.sweep;
            "eval-retrieval"
        }
        Command::Rmss(a) => {
            let c = &mut cfg.rmss;
            set_opt(&mut c.src_embeddings, a.src_embeddings);
            set_opt(&mut c.tgt_embeddings, a.tgt_embeddings);
            set(&mut c.k, a.k);
            c.matrix |= a.matrix;
            "rmss"
        }
        Command::Metrics(a) => {
            let c = &mut cfg.metrics;
            set_opt(&mut c.features_a, a.features_a);
            set_opt(&mut c.features_b, a.features_b);
            set_opt(&mut c.corpus_a, a.corpus_a);
            set_opt(&mut c.corpus_b, a.corpus_b);
            set(&mut c.merges, a.merges);
            set_opt(&mut c.wals, a.wals);
            set_opt(&mut c.lang_a, a.lang_a);
            set_opt(&mut c.lang_b, a.lang_b);
            "metrics"
        }
        Command::Codelength(a) => {
            set_opt(&mut cfg.codelength.loss_log, a.loss_log);
            "codelength"
        }
        Command::BpeLearn(a) => {
            set_opt(&mut cfg.bpe_learn.corpus, a.corpus);
            set(&mut cfg.bpe_learn.merges, a.merges);
            "bpe-learn"
        }
        Command::Synth(a) => {
            let c = &mut cfg.synth;
            set(&mut c.seed, a.seed);
            set(&mut c.words, a.words);
            set(&mut c.dim, a.dim);
            set(&mut c.noise, a.noise);
            set(&mut c.seed_pairs, a.seed_pairs);
            set(&mut c.documents, a.documents);
            set(&mut c.mono_sentences, a.mono_sentences);
            "synth"
        }
        Command::Replay(_) => unreachable!("replay is handled before flag overlay"),
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), Failure> {
    let Some(n) = threads else {
        return Ok(());
    };
    if n == 0 {
        return Err(Failure::new("invalid_argument", "--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new("runtime", e.to_string()))
}

/// Runs one subcommand with a fully merged config and writes its manifest.
fn run(sub: &str, mut cfg: PipelineConfig, out_flag: Option<PathBuf>) -> Result<Manifest, Failure> {
    let out_dir = cfg.resolve_out_dir(out_flag);
    init_threads(cfg.threads)?;
    fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::new("io", format!("{}: {e}", out_dir.display())))?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    let (ctx, summary) = commands::execute(sub, &mut cfg, &out_dir)?;
    let wall_clock_seconds = clock.elapsed().as_secs_f64();
    let outputs = ctx
        .outputs
        .iter()
        .map(|name| file_record(name, &out_dir.join(name)))
        .collect::<Result<Vec<_>, _>>()?;

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "lexmine".to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        subcommand: sub.to_owned(),
        config_sha256: config_hash(&cfg),
        config: cfg,
        inputs: ctx.inputs,
        outputs,
        threads: rayon::current_num_threads(),
        started_unix_seconds: started,
        wall_clock_seconds,
        summary,
    };
    let path = manifest.write(&out_dir)?;
    println!(
        "{}",
        json!({ "subcommand": sub, "manifest": path, "summary": manifest.summary })
    );
    Ok(manifest)
}

fn replay(args: ReplayArgs, out_flag: Option<PathBuf>, threads: Option<usize>) -> Result<(), Failure> {
    let recorded = Manifest::load(&args.manifest)?;
    let sub = commands::SUBCOMMANDS
        .iter()
        .find(|s| **s == recorded.subcommand)
        .ok_or_else(|| {
            Failure::new("manifest", format!("unknown subcommand `{}`", recorded.subcommand))
        })?;
    for input in &recorded.inputs {
        let now = file_record(&input.name, &input.path)?;
        if now.sha256 != input.sha256 {
            return Err(Failure::new(
                "input_changed",
                format!("{} changed since the recorded run", input.path.display()),
            ));
        }
    }
    let mut cfg = recorded.config.clone();
    set_opt(&mut cfg.threads, threads);
    let fresh = run(sub, cfg, out_flag)?;

    let expected: BTreeMap<&str, &str> = recorded
        .outputs
        .iter()
        .map(|o| (o.name.as_str(), o.sha256.as_str()))
        .collect();
    let produced: BTreeMap<&str, &str> = fresh
        .outputs
        .iter()
        .map(|o| (o.name.as_str(), o.sha256.as_str()))
        .collect();
    if expected != produced {
        let differing: Vec<&str> = expected
            .keys()
            .chain(produced.keys())
            .filter(|k| expected.get(*k) != produced.get(*k))
            .copied()
            .collect();
        return Err(Failure::new(
            "replay_mismatch",
            format!("replayed artifacts differ: {}", differing.join(", ")),
        ));
    }
    Ok(())
}

fn real_main() -> Result<(), Failure> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return Err(Failure::new("usage", e.to_string().trim_end())),
    };
    if let Command::Replay(args) = cli.command {
        return replay(args, cli.out_dir, cli.threads);
    }
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set_opt(&mut cfg.threads, cli.threads);
    let sub = apply_flags(cli.command, &mut cfg);
    if cli.print_config {
        cfg.resolve_out_dir(cli.out_dir);
        println!("{}", cfg.to_json());
        return Ok(());
    }
    run(sub, cfg, cli.out_dir).map(|_| ())
}

fn main() {
    if let Err(failure) = real_main() {
        eprintln!("{}", json!({ "error": failure.message, "kind": failure.kind }));
        std::process::exit(if failure.kind == "usage" { 2 } else { 1 });
    }
}
