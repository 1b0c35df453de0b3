use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use log::{info, warn};

use refreader_core::data::{
    encode_paragraphs, load_embeddings, load_gap_tsv, prepare_instance, read_paragraphs, tokenize, GapInstance, TokenizedInstance,
    Vocabulary,
};
use refreader_core::eval::{predictions_tsv, score, score_all, Gold, Prediction};
use refreader_core::reader::{read_sequence, Mode, ModelParams, ReaderConfig, TraceRecord, EMBED};
use refreader_core::trainer::{Checkpoint, CorefTask, LmTask, Task, TrainConfig, TrainOutcome, Trainer};

use crate::config::RunConfig;
use crate::Failure;

pub const CHECKPOINT: &str = "checkpoint.bin";
pub const VOCAB: &str = "vocab.txt";
pub const THRESHOLD: &str = "threshold.txt";
pub const LOG: &str = "train_log.jsonl";
pub const CONFIG: &str = "config.txt";
pub const PREDICTIONS: &str = "predictions.tsv";
pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";

/// Largest tolerated `|Σ(u + o) - e|` in an emitted trace.
const TRACE_MASS_TOLERANCE: f64 = 1e-6;

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn model_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(CHECKPOINT)
    } else {
        p.to_path_buf()
    }
}

fn prepare_out(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn load_vectors(params: &mut ModelParams, path: &Path, vocab: &Vocabulary, reader: &ReaderConfig, seed: u64) -> anyhow::Result<()> {
    let (table, coverage) = load_embeddings(path, vocab, reader.embed_dim, seed)?;
    info!(
        "embeddings cover {}/{} vocabulary entries ({:.1}%)",
        coverage.covered,
        coverage.total,
        100.0 * coverage.fraction()
    );
    params.set(EMBED, table)?;
    params.freeze(EMBED);
    Ok(())
}

/// Runs to completion and writes the log, which survives a divergence.
fn run_training<T: Task>(task: &T, reader: &ReaderConfig, cfg: &TrainConfig, params: ModelParams, out: &Path) -> Result<TrainOutcome, Failure> {
    let trainer = Trainer::new(task, reader, cfg)?;
    let mut state = trainer.start(params)?;
    let result = trainer.run(&mut state, None);
    let log: String = state.log.iter().map(|r| r.to_json() + "\n").collect();
    write(&out.join(LOG), log)?;
    result?;
    Ok(trainer.finish(state))
}

pub fn train_lm(cfg: &RunConfig, corpus: &[PathBuf], valid: &Path, out: &Path, embeddings: Option<&Path>) -> Result<(), Failure> {
    prepare_out(out)?;
    let train_p = read_paragraphs(corpus)?;
    let valid_p = read_paragraphs(&[valid])?;
    if train_p.is_empty() || valid_p.is_empty() {
        return Err(anyhow!("training and validation corpora must both contain text").into());
    }
    let vocab = Vocabulary::build(train_p.iter().flatten(), cfg.min_count)?;
    let (train, valid_seqs) = (encode_paragraphs(&train_p, &vocab), encode_paragraphs(&valid_p, &vocab));
    info!("{} training paragraphs, vocabulary of {}", train.len(), vocab.len());

    let mut comments = vec!["command: train-lm".to_string(), "regime: lm".to_string()];
    comments.extend(corpus.iter().map(|p| format!("corpus: {}", p.display())));
    comments.push(format!("valid: {}", valid.display()));
    if let Some(e) = embeddings {
        comments.push(format!("embeddings: {}", e.display()));
    }
    write(&out.join(CONFIG), cfg.echo(&comments))?;
    vocab.save(&out.join(VOCAB))?;

    let mut params = ModelParams::init(&cfg.reader, vocab.len(), cfg.train.seed)?;
    if let Some(path) = embeddings {
        load_vectors(&mut params, path, &vocab, &cfg.reader, cfg.train.seed)?;
    }
    let task = LmTask {
        train: &train,
        valid: &valid_seqs,
    };
    let outcome = run_training(&task, &cfg.reader, &cfg.train, params, out)?;
    let ppl = outcome.best_eval.as_ref().and_then(|e| e.perplexity);

    let mut ck = Checkpoint::new(outcome.reader, vocab, outcome.params);
    ck.epoch = outcome.best_epoch;
    ck.best_metric = ppl;
    ck.seed = cfg.train.seed;
    ck.regime = Some("lm".into());
    ck.train = Some(cfg.train.clone());
    ck.save(&out.join(CHECKPOINT))?;
    match ppl {
        Some(p) => println!("best epoch {}: validation perplexity {p:.3}", outcome.best_epoch),
        None => println!("no training epochs run"),
    }
    Ok(())
}

fn load_instances(path: &Path) -> anyhow::Result<Vec<GapInstance>> {
    let rows = load_gap_tsv(path).with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} holds no instances", path.display());
    }
    Ok(rows)
}

fn tokenized(rows: &[GapInstance], vocab: &Vocabulary) -> anyhow::Result<Vec<TokenizedInstance>> {
    Ok(rows.iter().map(|r| prepare_instance(r, vocab)).collect::<Result<_, _>>()?)
}

pub fn train_coref(
    cfg: &RunConfig,
    train: &Path,
    valid: &Path,
    out: &Path,
    init: Option<&Path>,
    embeddings: Option<&Path>,
) -> Result<(), Failure> {
    prepare_out(out)?;
    let train_rows = load_instances(train)?;
    let valid_rows = load_instances(valid)?;
    let mut cfg = cfg.clone();

    let (vocab, params, regime) = match init {
        Some(p) => {
            let path = model_path(p);
            let ck = Checkpoint::load(&path).with_context(|| format!("loading {}", path.display()))?;
            if (ck.reader.cells, ck.reader.embed_dim, ck.reader.hidden_dim) != (cfg.reader.cells, cfg.reader.embed_dim, cfg.reader.hidden_dim) {
                warn!("model sizes come from {}; configured sizes are ignored", path.display());
            }
            cfg.reader = ReaderConfig {
                tau: cfg.train.tau_init,
                dropout: cfg.train.dropout,
                ..ck.reader
            };
            (ck.vocab, ck.params, "lm+coref")
        }
        None => {
            let words = train_rows
                .iter()
                .chain(&valid_rows)
                .flat_map(|r| tokenize(&r.text))
                .map(|t| t.text);
            let vocab = Vocabulary::build(words, cfg.min_count)?;
            let mut params = ModelParams::init(&cfg.reader, vocab.len(), cfg.train.seed)?;
            match embeddings {
                Some(path) => load_vectors(&mut params, path, &vocab, &cfg.reader, cfg.train.seed)?,
                None => {
                    warn!("no --embeddings given; using frozen random embeddings");
                    params.freeze(EMBED);
                }
            }
            (vocab, params, "coref")
        }
    };
    info!("regime {regime}: {} training and {} validation instances", train_rows.len(), valid_rows.len());

    let mut comments = vec![
        "command: train-coref".to_string(),
        format!("regime: {regime}"),
        format!("train: {}", train.display()),
        format!("valid: {}", valid.display()),
    ];
    if let Some(p) = init {
        comments.push(format!("init: {}", p.display()));
    }
    if let Some(e) = embeddings {
        comments.push(format!("embeddings: {}", e.display()));
    }
    write(&out.join(CONFIG), cfg.echo(&comments))?;
    vocab.save(&out.join(VOCAB))?;

    let task = CorefTask::new(&tokenized(&train_rows, &vocab)?, &tokenized(&valid_rows, &vocab)?, vocab.start_id())?;
    let outcome = run_training(&task, &cfg.reader, &cfg.train, params, out)?;
    let eval = match outcome.best_eval.clone() {
        Some(e) => e,
        None => task.evaluate(&outcome.params, &outcome.reader, &cfg.train)?,
    };
    let threshold = eval.threshold.ok_or_else(|| anyhow!("validation produced no threshold"))?;
    write(&out.join(THRESHOLD), format!("{threshold}\n"))?;

    let mut ck = Checkpoint::new(outcome.reader, vocab, outcome.params);
    ck.epoch = outcome.best_epoch;
    ck.best_metric = eval.f1;
    ck.seed = cfg.train.seed;
    ck.regime = Some(regime.into());
    ck.threshold = Some(threshold);
    ck.train = Some(cfg.train.clone());
    ck.save(&out.join(CHECKPOINT))?;
    println!(
        "regime {regime}, best epoch {}: validation F1 {:.3} at threshold {threshold}",
        outcome.best_epoch,
        eval.f1.unwrap_or(0.0)
    );
    Ok(())
}

pub fn eval(model: &Path, test: &Path, threshold: Option<f64>, out: Option<&Path>) -> Result<(), Failure> {
    let path = model_path(model);
    let ck = Checkpoint::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let threshold = threshold
        .or(ck.threshold)
        .ok_or_else(|| Failure::Usage(format!("{} stores no threshold; pass --threshold", path.display())))?;
    if !threshold.is_finite() {
        return Err(Failure::Usage(format!("threshold must be finite, got {threshold}")));
    }
    let rows = load_instances(test)?;
    let instances = tokenized(&rows, &ck.vocab)?;
    let scores = score_all(&ck.params, &ck.reader, &instances)?;
    let predictions: Vec<Prediction> = scores.iter().map(|s| Prediction::at(s, threshold)).collect();
    let gold: Vec<Gold> = instances.iter().map(Gold::from).collect();
    let report = score(&predictions, &gold)?;

    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    prepare_out(&dir)?;
    write(&dir.join(PREDICTIONS), predictions_tsv(&predictions))?;
    let table = report.to_table();
    write(&dir.join(REPORT_TEXT), format!("threshold\t{threshold}\n{table}"))?;
    let json = serde_json::json!({ "threshold": threshold, "instances": instances.len(), "report": report });
    write(&dir.join(REPORT_JSON), serde_json::to_string_pretty(&json)? + "\n")?;
    print!("{table}");
    Ok(())
}

pub enum TraceSource<'a> {
    Text(&'a Path),
    Gap { ids: &'a str, test: &'a Path },
}

pub fn trace(model: &Path, source: TraceSource, tsv: bool, out: Option<&Path>) -> Result<(), Failure> {
    let path = model_path(model);
    let ck = Checkpoint::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let text = match source {
        TraceSource::Text(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        TraceSource::Gap { ids, test } => {
            let rows = load_instances(test)?;
            let mut texts = Vec::new();
            for id in ids.split(',').map(str::trim) {
                let row = rows
                    .iter()
                    .find(|r| r.id == id)
                    .ok_or_else(|| anyhow!("unknown instance id {id:?} in {}", test.display()))?;
                texts.push(row.text.as_str());
            }
            texts.join(" ")
        }
    };
    let tokens: Vec<String> = tokenize(&text).into_iter().map(|t| t.text).collect();
    if tokens.is_empty() {
        return Err(anyhow!("input has no tokens").into());
    }
    let mut ids = vec![ck.vocab.start_id()];
    ids.extend(ck.vocab.encode(&tokens));
    let read = read_sequence(&ck.params, &ck.reader, &ids, Mode::Eval, 0)?;

    let mut lines = Vec::with_capacity(tokens.len() + 1);
    if tsv {
        lines.push(TraceRecord::tsv_header(ck.reader.cells));
    }
    // the leading start symbol is read but not reported
    for (k, g) in read.records.iter().enumerate().skip(1) {
        let gap = g.entity_mass_gap();
        if gap > TRACE_MASS_TOLERANCE {
            return Err(anyhow!("token {}: |sum(u+o) - e| = {gap:e} exceeds {TRACE_MASS_TOLERANCE:e}", k - 1).into());
        }
        let rec = TraceRecord::from_gates(k - 1, &tokens[k - 1], g);
        lines.push(if tsv { rec.to_tsv() } else { serde_json::to_string(&rec)? });
    }
    let body = lines.join("\n") + "\n";
    match out {
        Some(p) => write(p, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}
