use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use refreader_core::data::{gap_tsv_header, template_corpus, GapInstance};
use tempfile::TempDir;

const SMALL: &str = "\
# tiny model for tests
embed_dim = 8
key_dim = 8
value_dim = 8
hidden_dim = 8
query_hidden_dim = 8
learning_rate = 0.005
dropout = 0
epochs_max = 200
patience = 40
seed = 1
";

fn refreader(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refreader"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: TempDir::new().unwrap(),
        };
        let corpus = template_corpus(50, 7);
        f.gap("train.tsv", &corpus[..40]);
        f.gap("valid.tsv", &corpus[40..]);
        f.file("small.cfg", SMALL);
        f.file("lm.cfg", &SMALL.replace("epochs_max = 200", "epochs_max = 5"));
        let text: String = corpus.iter().map(|i| format!("{}\n\n", i.text)).collect();
        f.file("lm_train.txt", &text);
        f.file("lm_valid.txt", &corpus[45..].iter().map(|i| format!("{}\n\n", i.text)).collect::<String>());
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn file(&self, name: &str, contents: &str) {
        fs::write(self.path(name), contents).unwrap();
    }

    fn gap(&self, name: &str, rows: &[GapInstance]) {
        let mut s = gap_tsv_header();
        for r in rows {
            s.push('\n');
            s.push_str(&r.to_tsv_row());
        }
        self.file(name, &(s + "\n"));
    }

    fn train_coref(&self, out: &str, config: &str, extra: &[&str]) -> Output {
        let (train, valid, cfg, out) = (self.p("train.tsv"), self.p("valid.tsv"), self.p(config), self.p(out));
        let mut args = vec!["train-coref", "--train", &train, "--valid", &valid, "--config", &cfg, "--out", &out];
        args.extend_from_slice(extra);
        refreader(&args)
    }

    fn train_lm(&self, out: &str, extra: &[&str]) -> Output {
        let (corpus, valid, cfg, out) = (self.p("lm_train.txt"), self.p("lm_valid.txt"), self.p("lm.cfg"), self.p(out));
        let mut args = vec!["train-lm", "--corpus", &corpus, "--valid", &valid, "--config", &cfg, "--out", &out, "--seed", "3"];
        args.extend_from_slice(extra);
        refreader(&args)
    }
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout: {}\nstderr: {}", o.status.code(), stdout(o), stderr(o));
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn missing_corpus_is_a_usage_error() {
    let o = refreader(&["train-lm", "--valid", "v.txt", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let f = Fixture::new();
    f.file("bad.cfg", "cells = 2\nwarmup_steps = 4\n");
    let o = refreader(&[
        "train-coref",
        "--train",
        &f.p("train.tsv"),
        "--valid",
        &f.p("valid.tsv"),
        "--out",
        &f.p("out"),
        "--config",
        &f.p("bad.cfg"),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("warmup_steps"), "{}", stderr(&o));
}

#[test]
fn language_model_run_writes_its_outputs_deterministically() {
    let f = Fixture::new();
    for out in ["lm1", "lm2"] {
        assert_ok(&f.train_lm(out, &["--cells", "3"]));
    }
    let dir = f.path("lm1");
    for name in ["checkpoint.bin", "vocab.txt", "train_log.jsonl", "config.txt"] {
        assert!(dir.join(name).is_file(), "{name} missing");
    }
    let config = read(&dir.join("config.txt"));
    assert!(config.contains("cells = 3") && config.contains("seed = 3"), "{config}");
    for name in ["checkpoint.bin", "train_log.jsonl"] {
        assert_eq!(fs::read(dir.join(name)).unwrap(), fs::read(f.path("lm2").join(name)).unwrap(), "{name} differs");
    }
    let first = read(&dir.join("train_log.jsonl")).lines().next().unwrap().to_string();
    let rec: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(rec["epoch"], 0);
    assert!(rec["perplexity"].as_f64().unwrap() > 1.0);
}

#[test]
fn divergence_exits_one_and_keeps_the_log() {
    let f = Fixture::new();
    f.file("hot.cfg", &format!("{SMALL}clip_norm = 0\n").replace("learning_rate = 0.005", "learning_rate = 1e300"));
    let o = refreader(&[
        "train-lm",
        "--corpus",
        &f.p("lm_train.txt"),
        "--valid",
        &f.p("lm_valid.txt"),
        "--config",
        &f.p("hot.cfg"),
        "--out",
        &f.p("hot"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("epoch 1"), "{}", stderr(&o));
    assert!(read(&f.path("hot").join("train_log.jsonl")).contains("\"epoch\":0"));
}

#[test]
fn coreference_training_then_evaluation() {
    let f = Fixture::new();
    assert_ok(&f.train_coref("coref", "small.cfg", &[]));
    let dir = f.path("coref");
    let threshold: f64 = read(&dir.join("threshold.txt")).trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&threshold));
    assert!(read(&dir.join("config.txt")).contains("# regime: coref"));

    let o = refreader(&["eval", "--model", &f.p("coref"), "--test", &f.p("valid.tsv")]);
    assert_ok(&o);
    let table = stdout(&o);
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("F1_M\tF1_F\tbias\tF1"));
    assert_eq!(lines.next(), Some("1.000\t1.000\t1.00\t1.000"));

    let preds = read(&dir.join("predictions.tsv"));
    assert_eq!(preds.lines().count(), 10);
    assert!(preds.lines().all(|l| l.split('\t').count() == 3 && l.contains("TRUE")));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.join("report.json"))).unwrap();
    assert_eq!(report["report"]["f1_overall"], 1.0);
    assert_eq!(report["threshold"], threshold);
}

#[test]
fn warm_start_is_logged_as_lm_plus_coref() {
    let f = Fixture::new();
    f.file("short.cfg", &SMALL.replace("epochs_max = 200", "epochs_max = 2"));
    assert_ok(&f.train_lm("lm", &[]));
    let o = f.train_coref("warm", "short.cfg", &["--init", &f.p("lm")]);
    assert_ok(&o);
    assert!(stdout(&o).contains("regime lm+coref"));
    assert!(read(&f.path("warm").join("config.txt")).contains("# regime: lm+coref"));
}

#[test]
fn malformed_tsv_reports_its_line() {
    let f = Fixture::new();
    let mut text = read(&f.path("train.tsv"));
    text.push_str("broken\trow\n");
    f.file("train.tsv", &text);
    let o = f.train_coref("bad", "small.cfg", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 42"), "{}", stderr(&o));
}

#[test]
fn evaluation_failures_exit_one() {
    let f = Fixture::new();
    f.file("zero.cfg", &SMALL.replace("epochs_max = 200", "epochs_max = 0"));
    assert_ok(&f.train_coref("m", "zero.cfg", &[]));
    f.file("empty.tsv", &(gap_tsv_header() + "\n"));
    let o = refreader(&["eval", "--model", &f.p("m"), "--test", &f.p("empty.tsv")]);
    assert_eq!(o.status.code(), Some(1));
    let o = refreader(&["eval", "--model", &f.p("nowhere"), "--test", &f.p("valid.tsv")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn traces_cover_every_token_with_one_block_per_cell() {
    let f = Fixture::new();
    f.file("zero.cfg", &SMALL.replace("epochs_max = 200", "epochs_max = 0"));
    assert_ok(&f.train_coref("m", "zero.cfg", &[]));
    f.file("story.txt", "Mary met John . She waved .");

    let o = refreader(&["trace", "--model", &f.p("m"), "--input", &f.p("story.txt")]);
    assert_ok(&o);
    let records: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 7);
    for (k, r) in records.iter().enumerate() {
        assert_eq!(r["token_index"], k);
        let cells = r["cells"].as_array().unwrap();
        assert_eq!(cells.len(), 2);
        let stored: f64 = cells.iter().map(|c| c["u"].as_f64().unwrap() + c["o"].as_f64().unwrap()).sum();
        assert!((stored - r["e"].as_f64().unwrap()).abs() <= 1e-6);
        for key in ["alpha", "u", "o", "copy", "salience"] {
            assert!(cells[0][key].is_number(), "{key}");
        }
    }
    assert_eq!(records[4]["token_text"], "She");

    let o = refreader(&[
        "trace",
        "--model",
        &f.p("m"),
        "--gap",
        "synthetic-40,synthetic-41",
        "--test",
        &f.p("valid.tsv"),
        "--trace-format",
        "tsv",
    ]);
    assert_ok(&o);
    let out = stdout(&o);
    let corpus = template_corpus(50, 7);
    let expected = refreader_core::data::tokenize(&corpus[40].text).len() + refreader_core::data::tokenize(&corpus[41].text).len();
    assert_eq!(out.lines().count(), expected + 1);
    assert!(out.starts_with("token_index\ttoken_text\te\tr\tc\tlambda\talpha0"));

    let o = refreader(&["trace", "--model", &f.p("m"), "--gap", "no-such-id", "--test", &f.p("valid.tsv")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no-such-id"));
}
