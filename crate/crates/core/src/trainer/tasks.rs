use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::autodiff::{Tape, Var};
use crate::data::{TokenSpan, TokenizedInstance};
use crate::error::{Error, Result};
use crate::eval::{best_threshold, model_input, span_score, Gold, InstanceScores, INPUT_OFFSET};
use crate::objectives::{coref_loss, coref_loss_on_tape, lm_loss_on_tape, perplexity, CorefMatrix, LinkKind, PairLabels};
use crate::reader::{read_on_tape, read_sequence, MemoryState, Mode, ModelParams, ParamVars, ReaderConfig};

/// Validation results of one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub perplexity: Option<f64>,
    pub f1: Option<f64>,
    /// Threshold at which `f1` was reached.
    pub threshold: Option<f64>,
}

/// A training objective over a fixed set of examples.
pub trait Task {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Loss of example `index` on a fresh tape, or `None` when the example
    /// carries no signal.
    fn loss(
        &self,
        tape: &mut Tape,
        pv: &ParamVars,
        reader: &ReaderConfig,
        cfg: &TrainConfig,
        index: usize,
        seed: u64,
    ) -> Result<Option<Var>>;

    fn evaluate(&self, params: &ModelParams, reader: &ReaderConfig, cfg: &TrainConfig) -> Result<Evaluation>;

    /// Early-stopping metric.
    fn metric(&self, eval: &Evaluation) -> f64;

    fn higher_is_better(&self) -> bool;
}

/// Next-token prediction over token-id sequences.
pub struct LmTask<'a> {
    pub train: &'a [Vec<usize>],
    pub valid: &'a [Vec<usize>],
}

impl Task for LmTask<'_> {
    fn len(&self) -> usize {
        self.train.len()
    }

    fn loss(
        &self,
        tape: &mut Tape,
        pv: &ParamVars,
        reader: &ReaderConfig,
        _cfg: &TrainConfig,
        index: usize,
        seed: u64,
    ) -> Result<Option<Var>> {
        let seq = &self.train[index];
        if seq.len() < 2 {
            return Ok(None);
        }
        let read = read_on_tape(tape, pv, reader, seq, Mode::Train, seed, &MemoryState::zeros(reader))?;
        lm_loss_on_tape(tape, pv, &read.steps, seq)
    }

    fn evaluate(&self, params: &ModelParams, reader: &ReaderConfig, _cfg: &TrainConfig) -> Result<Evaluation> {
        let ppl = perplexity(params, reader, self.valid)?;
        Ok(Evaluation {
            loss: ppl.ln(),
            perplexity: Some(ppl),
            f1: None,
            threshold: None,
        })
    }

    fn metric(&self, eval: &Evaluation) -> f64 {
        eval.perplexity.unwrap_or(f64::INFINITY)
    }

    fn higher_is_better(&self) -> bool {
        false
    }
}

/// Model input and supervised pairs for one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct CorefExample {
    pub input: Vec<usize>,
    pub labels: PairLabels,
    pub pronoun: usize,
    pub span_a: TokenSpan,
    pub span_b: TokenSpan,
    pub gold: Gold,
}

fn shifted(s: TokenSpan) -> TokenSpan {
    TokenSpan {
        first: s.first + INPUT_OFFSET,
        last: s.last + INPUT_OFFSET,
    }
}

impl CorefExample {
    /// Every token of each name span is paired with the pronoun under the
    /// name's label, and adjacent tokens within a span get self links.
    pub fn from_instance(instance: &TokenizedInstance, start_id: usize) -> Result<Self> {
        let input = model_input(instance, start_id);
        let pronoun = instance.pronoun_index + INPUT_OFFSET;
        let (span_a, span_b) = (shifted(instance.span_a), shifted(instance.span_b));
        for s in [span_a, span_b] {
            if s.last >= input.len() || pronoun >= input.len() {
                return Err(Error::Contract(format!("{}: annotation outside the token sequence", instance.id)));
            }
        }
        let mut labels = PairLabels::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut add = |labels: &mut PairLabels, a: usize, b: usize, label: bool, kind: LinkKind| -> Result<()> {
            if a != b && seen.insert((a.min(b), a.max(b))) {
                labels.push(a, b, label, kind)?;
            }
            Ok(())
        };
        for (span, label) in [(span_a, instance.label_a), (span_b, instance.label_b)] {
            for j in span.indices() {
                add(&mut labels, j, pronoun, label, LinkKind::Coref)?;
            }
        }
        for span in [span_a, span_b] {
            for j in span.first..span.last {
                add(&mut labels, j, j + 1, true, LinkKind::SelfLink)?;
            }
        }
        Ok(CorefExample {
            input,
            labels,
            pronoun,
            span_a,
            span_b,
            gold: Gold::from(instance),
        })
    }
}

/// Pairwise chain supervision on GAP-style instances; validation F1 is
/// taken at the best grid threshold.
pub struct CorefTask {
    pub train: Vec<CorefExample>,
    pub valid: Vec<CorefExample>,
}

impl CorefTask {
    pub fn new(train: &[TokenizedInstance], valid: &[TokenizedInstance], start_id: usize) -> Result<Self> {
        let build = |xs: &[TokenizedInstance]| -> Result<Vec<CorefExample>> {
            xs.iter().map(|i| CorefExample::from_instance(i, start_id)).collect()
        };
        Ok(CorefTask {
            train: build(train)?,
            valid: build(valid)?,
        })
    }
}

impl Task for CorefTask {
    fn len(&self) -> usize {
        self.train.len()
    }

    fn loss(
        &self,
        tape: &mut Tape,
        pv: &ParamVars,
        reader: &ReaderConfig,
        cfg: &TrainConfig,
        index: usize,
        seed: u64,
    ) -> Result<Option<Var>> {
        let ex = &self.train[index];
        let read = read_on_tape(tape, pv, reader, &ex.input, Mode::Train, seed, &MemoryState::zeros(reader))?;
        let coref = coref_loss_on_tape(tape, &read.steps, &ex.labels, &cfg.weights)?;
        if cfg.lm_weight == 0.0 {
            return Ok(coref);
        }
        let Some(lm) = lm_loss_on_tape(tape, pv, &read.steps, &ex.input)? else {
            return Ok(coref);
        };
        let lm = tape.scale(lm, cfg.lm_weight)?;
        Ok(Some(match coref {
            Some(c) => tape.add(c, lm)?,
            None => lm,
        }))
    }

    fn evaluate(&self, params: &ModelParams, reader: &ReaderConfig, cfg: &TrainConfig) -> Result<Evaluation> {
        if self.valid.is_empty() {
            return Err(Error::Contract("coreference validation set is empty".into()));
        }
        let mut scores = Vec::with_capacity(self.valid.len());
        let mut loss = 0.0;
        for ex in &self.valid {
            let read = read_sequence(params, reader, &ex.input, Mode::Eval, 0)?;
            let psi = CorefMatrix::for_pairs(&read.records, ex.labels.pairs())?;
            loss += coref_loss(&psi, &ex.labels, &cfg.weights)?;
            scores.push(InstanceScores {
                id: ex.gold.id.clone(),
                score_a: span_score(&read.records, ex.span_a, ex.pronoun)?,
                score_b: span_score(&read.records, ex.span_b, ex.pronoun)?,
            });
        }
        let gold: Vec<Gold> = self.valid.iter().map(|e| e.gold.clone()).collect();
        let (threshold, f1) = best_threshold(&scores, &gold, cfg.grid_step)?;
        Ok(Evaluation {
            loss: loss / self.valid.len() as f64,
            perplexity: None,
            f1: Some(f1),
            threshold: Some(threshold),
        })
    }

    fn metric(&self, eval: &Evaluation) -> f64 {
        eval.f1.unwrap_or(0.0)
    }

    fn higher_is_better(&self) -> bool {
        true
    }
}
