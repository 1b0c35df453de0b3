//! Pronoun-name predictions from chain probabilities, threshold selection
//! and gendered F1 scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::data::{GapInstance, TokenSpan, TokenizedInstance};
use crate::error::{Error, Result};
use crate::objectives::coref_probability;
use crate::reader::{read_sequence, GateRecord, Mode, ModelParams, ReaderConfig};

/// Model input is the instance's ids preceded by `<s>`, so every token
/// index of an instance is shifted by this much.
pub const INPUT_OFFSET: usize = 1;

pub const DEFAULT_GRID_STEP: f64 = 0.01;

/// `<s>` followed by the instance ids.
pub fn model_input(instance: &TokenizedInstance, start_id: usize) -> Vec<usize> {
    let mut ids = Vec::with_capacity(instance.ids.len() + INPUT_OFFSET);
    ids.push(start_id);
    ids.extend_from_slice(&instance.ids);
    ids
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceScores {
    pub id: String,
    pub score_a: f64,
    pub score_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub pred_a: bool,
    pub pred_b: bool,
    pub score_a: f64,
    pub score_b: f64,
}

impl Prediction {
    pub fn at(scores: &InstanceScores, threshold: f64) -> Self {
        Prediction {
            id: scores.id.clone(),
            pred_a: scores.score_a > threshold,
            pred_b: scores.score_b > threshold,
            score_a: scores.score_a,
            score_b: scores.score_b,
        }
    }
}

/// Largest ψ between the pronoun and any token of `span`. Indices are
/// positions in `records`.
pub fn span_score(records: &[GateRecord], span: TokenSpan, pronoun: usize) -> Result<f64> {
    if pronoun >= records.len() {
        return Err(Error::Contract(format!(
            "pronoun index {pronoun} outside sequence of {}",
            records.len()
        )));
    }
    let mut best = 0.0f64;
    for j in span.indices().filter(|&j| j != pronoun) {
        let p = coref_probability(records, j.min(pronoun), j.max(pronoun))?;
        best = best.max(p);
    }
    Ok(best)
}

pub fn instance_scores(params: &ModelParams, config: &ReaderConfig, instance: &TokenizedInstance) -> Result<InstanceScores> {
    let input = model_input(instance, crate::data::Vocabulary::default().start_id());
    let pronoun = instance.pronoun_index + INPUT_OFFSET;
    if pronoun >= input.len() {
        return Err(Error::Contract(format!(
            "{}: pronoun index {} outside {} tokens",
            instance.id,
            instance.pronoun_index,
            instance.ids.len()
        )));
    }
    let read = read_sequence(params, config, &input, Mode::Eval, 0)?;
    let shift = |s: TokenSpan| TokenSpan {
        first: s.first + INPUT_OFFSET,
        last: s.last + INPUT_OFFSET,
    };
    Ok(InstanceScores {
        id: instance.id.clone(),
        score_a: span_score(&read.records, shift(instance.span_a), pronoun)?,
        score_b: span_score(&read.records, shift(instance.span_b), pronoun)?,
    })
}

pub fn predict_instance(
    params: &ModelParams,
    config: &ReaderConfig,
    instance: &TokenizedInstance,
    threshold: f64,
) -> Result<Prediction> {
    Ok(Prediction::at(&instance_scores(params, config, instance)?, threshold))
}

pub fn score_all(params: &ModelParams, config: &ReaderConfig, instances: &[TokenizedInstance]) -> Result<Vec<InstanceScores>> {
    instances.iter().map(|i| instance_scores(params, config, i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Masculine,
    Feminine,
    Unknown,
}

pub fn gender_of(pronoun: &str) -> Gender {
    match pronoun.to_lowercase().as_str() {
        "he" | "him" | "his" | "himself" => Gender::Masculine,
        "she" | "her" | "hers" | "herself" => Gender::Feminine,
        _ => Gender::Unknown,
    }
}

/// Gold labels of one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gold {
    pub id: String,
    pub gender: Gender,
    pub label_a: bool,
    pub label_b: bool,
}

impl From<&TokenizedInstance> for Gold {
    fn from(i: &TokenizedInstance) -> Self {
        Gold {
            id: i.id.clone(),
            gender: gender_of(&i.pronoun),
            label_a: i.label_a,
            label_b: i.label_b,
        }
    }
}

impl From<&GapInstance> for Gold {
    fn from(i: &GapInstance) -> Self {
        Gold {
            id: i.id.clone(),
            gender: gender_of(&i.pronoun.text),
            label_a: i.label_a,
            label_b: i.label_b,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Counts {
    pub fn add(&mut self, predicted: bool, gold: bool) {
        match (predicted, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn precision(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    /// F1 of the positive class; 0 when there are no true positives.
    pub fn f1(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / (2 * self.tp + self.fp + self.fn_) as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub masculine: Counts,
    pub feminine: Counts,
    pub overall: Counts,
    pub f1_m: f64,
    pub f1_f: f64,
    pub f1_overall: f64,
    /// `f1_f / f1_m`; absent when `f1_m` is 0.
    pub bias: Option<f64>,
}

impl ScoreReport {
    fn from_counts(masculine: Counts, feminine: Counts, overall: Counts) -> Self {
        let (f1_m, f1_f) = (masculine.f1(), feminine.f1());
        ScoreReport {
            masculine,
            feminine,
            overall,
            f1_m,
            f1_f,
            f1_overall: overall.f1(),
            bias: (f1_m > 0.0).then(|| f1_f / f1_m),
        }
    }

    /// Two lines: column names then values, in the order M, F, bias, overall.
    pub fn to_table(&self) -> String {
        let bias = self.bias.map_or_else(|| "n/a".to_string(), |b| format!("{b:.2}"));
        format!(
            "F1_M\tF1_F\tbias\tF1\n{:.3}\t{:.3}\t{}\t{:.3}\n",
            self.f1_m, self.f1_f, bias, self.f1_overall
        )
    }
}

/// Scores predictions against gold labels; each instance contributes two
/// binary decisions. Predictions and gold must cover the same ids.
pub fn score(predictions: &[Prediction], gold: &[Gold]) -> Result<ScoreReport> {
    let mut by_id: BTreeMap<&str, &Gold> = BTreeMap::new();
    for g in gold {
        if by_id.insert(&g.id, g).is_some() {
            return Err(Error::Validation {
                id: g.id.clone(),
                detail: "duplicate gold id".into(),
            });
        }
    }
    let mut seen = BTreeSet::new();
    let (mut m, mut f, mut all) = (Counts::default(), Counts::default(), Counts::default());
    for p in predictions {
        let g = by_id.get(p.id.as_str()).ok_or_else(|| Error::Validation {
            id: p.id.clone(),
            detail: "prediction without gold instance".into(),
        })?;
        if !seen.insert(p.id.as_str()) {
            return Err(Error::Validation {
                id: p.id.clone(),
                detail: "duplicate prediction".into(),
            });
        }
        let mut slice = match g.gender {
            Gender::Masculine => Some(&mut m),
            Gender::Feminine => Some(&mut f),
            Gender::Unknown => {
                log::warn!("{}: pronoun gender unknown, counted in overall only", g.id);
                None
            }
        };
        for (pred, label) in [(p.pred_a, g.label_a), (p.pred_b, g.label_b)] {
            all.add(pred, label);
            if let Some(c) = slice.as_deref_mut() {
                c.add(pred, label);
            }
        }
    }
    if let Some(missing) = gold.iter().find(|g| !seen.contains(g.id.as_str())) {
        return Err(Error::Validation {
            id: missing.id.clone(),
            detail: "gold instance without prediction".into(),
        });
    }
    Ok(ScoreReport::from_counts(m, f, all))
}

/// Thresholds `0, step, 2·step, …, 1`.
pub fn threshold_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::Contract(format!("grid step {step} outside (0, 1)")));
    }
    let n = (1.0 / step).round() as usize;
    let mut grid: Vec<f64> = (0..n).map(|k| k as f64 * step).filter(|&t| t < 1.0).collect();
    grid.push(1.0);
    Ok(grid)
}

/// Overall F1 of thresholded scores.
pub fn f1_at(scores: &[InstanceScores], gold: &[Gold], threshold: f64) -> Result<f64> {
    let preds: Vec<Prediction> = scores.iter().map(|s| Prediction::at(s, threshold)).collect();
    Ok(score(&preds, gold)?.f1_overall)
}

/// Grid threshold with the best overall F1; ties go to the lowest.
pub fn best_threshold(scores: &[InstanceScores], gold: &[Gold], step: f64) -> Result<(f64, f64)> {
    if scores.is_empty() {
        return Err(Error::Contract("threshold sweep over an empty validation set".into()));
    }
    let mut best = (0.0, f64::NEG_INFINITY);
    for t in threshold_grid(step)? {
        let f1 = f1_at(scores, gold, t)?;
        if f1 > best.1 {
            best = (t, f1);
        }
    }
    Ok(best)
}

pub fn sweep_threshold(
    params: &ModelParams,
    config: &ReaderConfig,
    instances: &[TokenizedInstance],
    step: f64,
) -> Result<f64> {
    let scores = score_all(params, config, instances)?;
    let gold: Vec<Gold> = instances.iter().map(Gold::from).collect();
    Ok(best_threshold(&scores, &gold, step)?.0)
}

fn tsv_bool(b: bool) -> &'static str {
    if b {
        "TRUE"
    } else {
        "FALSE"
    }
}

/// `id, A-coref, B-coref` rows with TRUE/FALSE values, no header.
pub fn predictions_tsv(predictions: &[Prediction]) -> String {
    predictions
        .iter()
        .map(|p| format!("{}\t{}\t{}\n", p.id, tsv_bool(p.pred_a), tsv_bool(p.pred_b)))
        .collect()
}

/// Reads rows written by [`predictions_tsv`]. Scores are not stored and
/// come back as 0/1.
pub fn parse_predictions_tsv<R: BufRead>(reader: R) -> Result<Vec<Prediction>> {
    let parse_bool = |s: &str, line: usize| match s.to_ascii_uppercase().as_str() {
        "TRUE" => Ok(true),
        "FALSE" => Ok(false),
        _ => Err(Error::Parse {
            line,
            detail: format!("expected TRUE or FALSE, got {s:?}"),
        }),
    };
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let n = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: n,
            detail: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: n,
                detail: format!("expected 3 columns, got {}", cols.len()),
            });
        }
        let (a, b) = (parse_bool(cols[1], n)?, parse_bool(cols[2], n)?);
        out.push(Prediction {
            id: cols[0].to_string(),
            pred_a: a,
            pred_b: b,
            score_a: a as u8 as f64,
            score_b: b as u8 as f64,
        });
    }
    Ok(out)
}
