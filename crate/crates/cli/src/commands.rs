use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lexmine::codeswitch::{codeswitch_corpus, CodeSwitchConfig};
use lexmine::corpus::{count_frequencies, learn_bpe, read_corpus};
use lexmine::embeddings::{fit_procrustes, induce_lexicon, induce_lexicon_for, load_vectors};
use lexmine::lexicon::read_pairs;
use lexmine::lingmetrics::{
    char_overlap, load_wals, online_codelength, shared_wals, syntactic_distance, token_overlap,
    FeatureVector, LossLog,
};
use lexmine::mining::{mine_documents, read_documents, write_mined_tsv, write_parallel};
use lexmine::retrieval_eval::{
    evaluate_prf, jaccard_retrieve, read_predictions, rmss, sweep_prf, write_predictions,
    GoldBitext, Prediction, SentenceEmbeddingSet, Side,
};
use lexmine::synthetic::{synthetic_world, WorldConfig};
use lexmine::{Lexicon, Provenance};
use serde_json::{json, Value};

use crate::config::{PipelineConfig, RetrievalMethod};
use crate::manifest::{input_records, FileRecord};
use crate::Failure;

pub const SUBCOMMANDS: &[&str] = &[
    "induce",
    "mine",
    "codeswitch",
    "eval-retrieval",
    "rmss",
    "metrics",
    "codelength",
    "bpe-learn",
    "synth",
];

/// Inputs read and artifacts written by one subcommand.
pub struct Ctx {
    out_dir: PathBuf,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<String>,
}

fn check(ok: bool, message: impl Into<String>) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::new("invalid_argument", message))
    }
}

impl Ctx {
    fn new(out_dir: &Path) -> Self {
        Ctx {
            out_dir: out_dir.to_owned(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Resolves a required input to an absolute path, stores that path back
    /// into the config and records its checksum.
    fn input(&mut self, slot: &mut Option<PathBuf>, role: &str, flag: &str) -> Result<PathBuf, Failure> {
        let Some(given) = slot.as_ref() else {
            return Err(Failure::new("missing_input", format!("missing required input {flag}")));
        };
        let path = fs::canonicalize(given)
            .map_err(|e| Failure::new("io", format!("{}: {e}", given.display())))?;
        self.inputs.extend(input_records(role, &path)?);
        *slot = Some(path.clone());
        Ok(path)
    }

    fn optional_input(&mut self, slot: &mut Option<PathBuf>, role: &str) -> Result<Option<PathBuf>, Failure> {
        if slot.is_none() {
            return Ok(None);
        }
        self.input(slot, role, role).map(Some)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
        self.outputs.push(name.to_owned());
        Ok(())
    }

    fn write_with<F>(&mut self, name: &str, fill: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| Failure::new("io", e.to_string()))?;
        self.write(name, &buf)
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

pub fn execute(sub: &str, cfg: &mut PipelineConfig, out_dir: &Path) -> Result<(Ctx, Value), Failure> {
    let mut ctx = Ctx::new(out_dir);
    let summary = match sub {
        "induce" => induce(cfg, &mut ctx)?,
        "mine" => mine(cfg, &mut ctx)?,
        "codeswitch" => codeswitch(cfg, &mut ctx)?,
        "eval-retrieval" => eval_retrieval(cfg, &mut ctx)?,
        "rmss" => rmss_cmd(cfg, &mut ctx)?,
        "metrics" => metrics(cfg, &mut ctx)?,
        "codelength" => codelength(cfg, &mut ctx)?,
        "bpe-learn" => bpe_learn(cfg, &mut ctx)?,
        "synth" => synth(cfg, &mut ctx)?,
        other => return Err(Failure::new("usage", format!("unknown subcommand `{other}`"))),
    };
    Ok((ctx, summary))
}

fn induce(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let tok = cfg.tokenizer;
    let c = &mut cfg.induce;
    check(c.cap >= 1, "induce.cap must be at least 1")?;
    check(c.csls_k >= 1, "induce.csls_k must be at least 1")?;
    let src_path = ctx.input(&mut c.src_vectors, "src_vectors", "--src-vectors")?;
    let tgt_path = ctx.input(&mut c.tgt_vectors, "tgt_vectors", "--tgt-vectors")?;
    let seed_path = ctx.input(&mut c.seed_lexicon, "seed_lexicon", "--seed-lexicon")?;
    let corpus_path = ctx.optional_input(&mut c.src_corpus, "src_corpus")?;

    let (src, src_stats) = load_vectors(&src_path, c.max_vectors)?;
    let (tgt, tgt_stats) = load_vectors(&tgt_path, c.max_vectors)?;
    let (seeds, _) = read_pairs(&seed_path, None)?;
    let fit = fit_procrustes(&src, &tgt, seeds.iter().map(|(s, t)| (s.as_str(), t.as_str())))?;
    let lex = match &corpus_path {
        Some(path) => {
            let corpus = read_corpus(path, &tok)?;
            induce_lexicon(&src, &tgt, &fit.map, &count_frequencies(&corpus), c.cap, c.csls_k)?
        }
        None => {
            let n = c.cap.min(src.len());
            induce_lexicon_for(&src, &tgt, &fit.map, &src.vocab()[..n], c.csls_k)?
        }
    };

    ctx.write_with("lexicon.tsv", |w| lex.write_tsv(w))?;
    let dim = fit.map.dim();
    let rows: Vec<&[f64]> = fit.map.as_row_major().chunks(dim).collect();
    ctx.write_json(
        "map.json",
        &json!({
            "dim": dim,
            "orthogonality_error": fit.map.orthogonality_error(),
            "rows": rows,
        }),
    )?;
    Ok(json!({
        "src_words": src.len(),
        "tgt_words": tgt.len(),
        "src_duplicates": src_stats.duplicates,
        "tgt_duplicates": tgt_stats.duplicates,
        "seed_pairs_used": fit.used_pairs,
        "seed_pairs_skipped": fit.skipped_pairs,
        "frequency_source": if corpus_path.is_some() { "corpus" } else { "vector_order" },
        "entries": lex.len(),
    }))
}

fn mine(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let tok = cfg.tokenizer;
    let c = &mut cfg.mine;
    check(
        (0.0..=1.0).contains(&c.threshold),
        format!("mine.threshold must lie in [0, 1], got {}", c.threshold),
    )?;
    let docs_path = ctx.input(&mut c.documents, "documents", "--documents")?;
    let lex_path = ctx.input(&mut c.lexicon, "lexicon", "--lexicon")?;
    let docs = read_documents(&docs_path, &tok)?;
    let lex = Lexicon::load(&lex_path, Some(&tok))?;
    let mined = mine_documents(&docs, &lex, c.threshold)?;

    ctx.write_with("mined.tsv", |w| write_mined_tsv(&mined, w))?;
    let (mut src, mut tgt) = (Vec::new(), Vec::new());
    write_parallel(&mined, &mut src, &mut tgt).map_err(|e| Failure::new("io", e.to_string()))?;
    ctx.write("mined.src", &src)?;
    ctx.write("mined.tgt", &tgt)?;
    let mean_score = if mined.is_empty() {
        0.0
    } else {
        mined.iter().map(|p| p.score).sum::<f64>() / mined.len() as f64
    };
    Ok(json!({
        "documents": docs.len(),
        "src_sentences": docs.iter().map(|d| d.src_sentences.len()).sum::<usize>(),
        "tgt_sentences": docs.iter().map(|d| d.tgt_sentences.len()).sum::<usize>(),
        "lexicon_entries": lex.len(),
        "pairs": mined.len(),
        "mean_score": mean_score,
    }))
}

fn codeswitch(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let tok = cfg.tokenizer;
    let c = &mut cfg.codeswitch;
    let cs = CodeSwitchConfig {
        min_ratio: c.min_ratio,
        max_ratio: c.max_ratio,
        rng_seed: c.seed,
        direction: c.direction,
    };
    cs.validate()?;
    let corpus_path = ctx.input(&mut c.corpus, "corpus", "--corpus")?;
    let lex_path = ctx.input(&mut c.lexicon, "lexicon", "--lexicon")?;
    let corpus = read_corpus(&corpus_path, &tok)?;
    let lex = cs.oriented(&Lexicon::load(&lex_path, Some(&tok))?);
    let (switched, stats) = codeswitch_corpus(&corpus, &lex, &cs)?;

    ctx.write_with("codeswitched.txt", |w| {
        for s in &switched {
            writeln!(w, "{}", s.sentence.joined())?;
        }
        Ok(())
    })?;
    Ok(json!({
        "lines": corpus.len(),
        "emitted": stats.emitted,
        "skipped": stats.skipped,
        "mean_ratio": stats.mean_ratio,
    }))
}

fn eval_retrieval(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let tok = cfg.tokenizer;
    let c = &mut cfg.eval_retrieval;
    check(c.threshold.is_finite(), "eval_retrieval.threshold must be finite")?;
    let gold_path = ctx.input(&mut c.gold, "gold", "--gold")?;
    let gold = GoldBitext::load(&gold_path)?;
    let predictions: BTreeMap<String, Prediction> = match c.method {
        RetrievalMethod::Predictions => {
            read_predictions(&ctx.input(&mut c.predictions, "predictions", "--predictions")?)?
        }
        RetrievalMethod::Jaccard => {
            let src = read_corpus(&ctx.input(&mut c.src, "src", "--src")?, &tok)?;
            let tgt = read_corpus(&ctx.input(&mut c.tgt, "tgt", "--tgt")?, &tok)?;
            let lex = Lexicon::load(&ctx.input(&mut c.lexicon, "lexicon", "--lexicon")?, Some(&tok))?;
            jaccard_retrieve(&src, &tgt, &lex)
                .into_iter()
                .enumerate()
                .filter_map(|(i, best)| {
                    best.map(|(j, score)| (i.to_string(), Prediction { target: j.to_string(), score }))
                })
                .collect()
        }
        RetrievalMethod::Rmss => {
            let src = SentenceEmbeddingSet::load(
                &ctx.input(&mut c.src_embeddings, "src_embeddings", "--src-embeddings")?,
                Side::Source,
            )?;
            let tgt = SentenceEmbeddingSet::load(
                &ctx.input(&mut c.tgt_embeddings, "tgt_embeddings", "--tgt-embeddings")?,
                Side::Target,
            )?;
            top1(&src, &tgt, &rmss(&src, &tgt, c.k)?)
        }
    };
    if c.method != RetrievalMethod::Predictions {
        ctx.write_with("predictions.tsv", |w| write_predictions(&predictions, w))?;
    }
    let report = evaluate_prf(&predictions, &gold, c.threshold)?;
    let report_json = serde_json::to_value(report).expect("report serializes");
    ctx.write_json("report.json", &report_json)?;
    if c.sweep {
        let sweep = sweep_prf(&predictions, &gold)?;
        ctx.write_json("sweep.json", &serde_json::to_value(&sweep).expect("report serializes"))?;
    }
    Ok(report_json)
}

fn top1(
    src: &SentenceEmbeddingSet,
    tgt: &SentenceEmbeddingSet,
    scores: &lexmine::retrieval_eval::ScoreMatrix,
) -> BTreeMap<String, Prediction> {
    (0..scores.rows)
        .filter_map(|i| {
            scores.argmax(i).map(|(j, score)| {
                (src.ids()[i].clone(), Prediction { target: tgt.ids()[j].clone(), score })
            })
        })
        .collect()
}

fn rmss_cmd(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let c = &mut cfg.rmss;
    let src = SentenceEmbeddingSet::load(
        &ctx.input(&mut c.src_embeddings, "src_embeddings", "--src-embeddings")?,
        Side::Source,
    )?;
    let tgt = SentenceEmbeddingSet::load(
        &ctx.input(&mut c.tgt_embeddings, "tgt_embeddings", "--tgt-embeddings")?,
        Side::Target,
    )?;
    let scores = rmss(&src, &tgt, c.k)?;
    let best = top1(&src, &tgt, &scores);
    ctx.write_with("rmss_top1.tsv", |w| write_predictions(&best, w))?;
    if c.matrix {
        ctx.write_with("rmss_matrix.tsv", |w| {
            writeln!(w, "\t{}", tgt.ids().join("\t"))?;
            for (i, id) in src.ids().iter().enumerate() {
                write!(w, "{id}")?;
                for v in scores.row(i) {
                    write!(w, "\t{v}")?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?;
    }
    Ok(json!({ "sources": src.len(), "targets": tgt.len(), "k": c.k }))
}

fn metrics(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let tok = cfg.tokenizer;
    let c = &mut cfg.metrics;
    let mut out = serde_json::Map::new();

    if c.features_a.is_some() || c.features_b.is_some() {
        let a = FeatureVector::load(&ctx.input(&mut c.features_a, "features_a", "--features-a")?)?;
        let b = FeatureVector::load(&ctx.input(&mut c.features_b, "features_b", "--features-b")?)?;
        out.insert("language_a".into(), json!(a.language));
        out.insert("language_b".into(), json!(b.language));
        out.insert("syntactic_distance".into(), json!(syntactic_distance(&a, &b)?));
    }
    if c.corpus_a.is_some() || c.corpus_b.is_some() {
        let a = read_corpus(&ctx.input(&mut c.corpus_a, "corpus_a", "--corpus-a")?, &tok)?;
        let b = read_corpus(&ctx.input(&mut c.corpus_b, "corpus_b", "--corpus-b")?, &tok)?;
        let chars = char_overlap(a.iter().map(|s| s.raw.as_str()), b.iter().map(|s| s.raw.as_str()));
        out.insert("char_overlap".into(), json!(chars));
        out.insert("token_overlap".into(), json!(token_overlap(&a, &b, c.merges)?));
        out.insert("token_overlap_merges".into(), json!(c.merges));
    }
    if c.wals.is_some() {
        let path = ctx.input(&mut c.wals, "wals", "--wals")?;
        let (Some(la), Some(lb)) = (&c.lang_a, &c.lang_b) else {
            return Err(Failure::new("missing_input", "--wals needs --lang-a and --lang-b"));
        };
        let tables = load_wals(&path)?;
        let lookup = |lang: &str| {
            tables.get(lang).ok_or_else(|| {
                Failure::new("invalid_argument", format!("language `{lang}` not in {}", path.display()))
            })
        };
        let (ta, tb) = (lookup(la)?, lookup(lb)?);
        out.insert("wals_features_a".into(), json!(ta.len()));
        out.insert("wals_features_b".into(), json!(tb.len()));
        out.insert("shared_wals_features".into(), json!(shared_wals(ta, tb)));
    }
    if out.is_empty() {
        return Err(Failure::new(
            "missing_input",
            "metrics needs feature vectors, two corpora or a WALS file",
        ));
    }
    let value = Value::Object(out);
    ctx.write_json("metrics.json", &value)?;
    Ok(value)
}

fn codelength(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let path = ctx.input(&mut cfg.codelength.loss_log, "loss_log", "--loss-log")?;
    let log = LossLog::load(&path)?;
    let bits = online_codelength(&log)?;
    let value = json!({
        "codelength_bits": bits,
        "initial_bits": log.initial_bits(),
        "num_classes": log.num_classes,
        "first_subset_tokens": log.first_subset_tokens,
        "subsets": log.subsets.len(),
    });
    ctx.write_json("codelength.json", &value)?;
    Ok(value)
}

fn bpe_learn(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let tok = cfg.tokenizer;
    let c = &mut cfg.bpe_learn;
    let corpus = read_corpus(&ctx.input(&mut c.corpus, "corpus", "--corpus")?, &tok)?;
    let vocab = learn_bpe(&corpus, c.merges)?;
    ctx.write_with("bpe.merges", |w| vocab.write_merges(w))?;
    ctx.write_with("bpe.vocab", |w| {
        for symbol in vocab.vocab() {
            writeln!(w, "{symbol}")?;
        }
        Ok(())
    })?;
    Ok(json!({
        "merges_requested": c.merges,
        "merges_learned": vocab.num_merges(),
        "vocab_size": vocab.vocab().len(),
        "tokens": corpus.iter().map(|s| s.len()).sum::<usize>(),
    }))
}

fn synth(cfg: &mut PipelineConfig, ctx: &mut Ctx) -> Result<Value, Failure> {
    let c = &cfg.synth;
    let defaults = WorldConfig::default();
    check(c.dim >= 1, "synth.dim must be at least 1")?;
    check(c.words >= defaults.max_len, format!("synth.words must be at least {}", defaults.max_len))?;
    check(c.seed_pairs <= c.words, "synth.seed_pairs cannot exceed synth.words")?;
    check(c.noise.is_finite() && c.noise >= 0.0, "synth.noise must be finite and non-negative")?;
    let world = synthetic_world(&WorldConfig {
        num_words: c.words,
        dim: c.dim,
        noise: c.noise,
        seed_pairs: c.seed_pairs,
        num_docs: c.documents,
        mono_sentences: c.mono_sentences,
        seed: c.seed,
        ..defaults
    });
    let emb = &world.embeddings;
    ctx.write_with("src.vec", |w| emb.src.write_text(w))?;
    ctx.write_with("tgt.vec", |w| emb.tgt.write_text(w))?;
    let seed = Lexicon::from_pairs(world.seed_pairs.iter().cloned(), Provenance::Seed);
    ctx.write_with("seed_lexicon.tsv", |w| seed.write_tsv(w))?;
    let gold = Lexicon::from_pairs(emb.alignment.iter().cloned(), Provenance::Seed);
    ctx.write_with("gold_lexicon.tsv", |w| gold.write_tsv(w))?;
    ctx.write_with("documents.jsonl", |w| {
        for d in &world.documents {
            let record = json!({
                "doc_id": d.doc_id,
                "src": d.src_sentences.iter().map(|s| s.joined()).collect::<Vec<_>>(),
                "tgt": d.tgt_sentences.iter().map(|s| s.joined()).collect::<Vec<_>>(),
            });
            writeln!(w, "{record}")?;
        }
        Ok(())
    })?;
    ctx.write_with("planted.tsv", |w| {
        for (doc, s, t) in &world.planted {
            writeln!(w, "{doc}\t{s}\t{t}")?;
        }
        Ok(())
    })?;
    ctx.write_with("mono.src.txt", |w| {
        for s in &world.mono_src {
            writeln!(w, "{}", s.joined())?;
        }
        Ok(())
    })?;
    Ok(json!({
        "words": emb.src.len(),
        "seed_pairs": world.seed_pairs.len(),
        "documents": world.documents.len(),
        "planted_pairs": world.planted.len(),
        "mono_sentences": world.mono_src.len(),
    }))
}
