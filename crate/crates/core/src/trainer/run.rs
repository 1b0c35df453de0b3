use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, clip_global_norm, AdamState};
use super::config::TrainConfig;
use super::schedule::{anneal_tau, EarlyStopping, Progress};
use super::tasks::{CorefTask, Evaluation, LmTask, Task};
use crate::autodiff::Tape;
use crate::data::{TokenizedInstance, Vocabulary};
use crate::error::{Error, Result};
use crate::reader::{ModelParams, ParamVars, ReaderConfig};

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perplexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f1: Option<f64>,
    pub tau: f64,
}

impl LogRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log records serialize")
    }
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    /// Last completed epoch; 0 before any training.
    pub epoch: usize,
    pub params: ModelParams,
    pub adam: AdamState,
    pub stopper: EarlyStopping,
    pub best: ModelParams,
    pub best_epoch: usize,
    pub best_eval: Option<Evaluation>,
    pub best_tau: f64,
    pub stopped: bool,
    pub log: Vec<LogRecord>,
}

/// Result of a finished run: the parameters of the best validation epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Reader configuration with the temperature of the best epoch.
    pub reader: ReaderConfig,
    pub best_epoch: usize,
    pub best_eval: Option<Evaluation>,
    pub epochs_run: usize,
    pub log: Vec<LogRecord>,
}

/// Mixes a run seed with an epoch and an example index.
pub fn derive_seed(seed: u64, epoch: usize, index: usize) -> u64 {
    let mut z = seed
        ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (index as u64).wrapping_add(1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |err| match err {
        Error::Numeric { .. } | Error::NonFinite { .. } => Error::Divergence {
            epoch,
            detail: err.to_string(),
        },
        other => other,
    }
}

/// Online training: one Adam update per example, examples shuffled each
/// epoch, validation after every epoch.
pub struct Trainer<'a, T: Task> {
    pub task: &'a T,
    pub reader: ReaderConfig,
    pub cfg: &'a TrainConfig,
}

impl<'a, T: Task> Trainer<'a, T> {
    pub fn new(task: &'a T, reader: &ReaderConfig, cfg: &'a TrainConfig) -> Result<Self> {
        cfg.validate()?;
        reader.validate()?;
        if task.is_empty() {
            return Err(Error::Contract("training set is empty".into()));
        }
        let mut reader = reader.clone();
        reader.dropout = cfg.dropout;
        Ok(Trainer { task, reader, cfg })
    }

    fn reader_at(&self, tau: f64) -> ReaderConfig {
        ReaderConfig {
            tau,
            ..self.reader.clone()
        }
    }

    fn evaluate(&self, params: &ModelParams, epoch: usize, tau: f64) -> Result<Evaluation> {
        let eval = self
            .task
            .evaluate(params, &self.reader_at(tau), self.cfg)
            .map_err(diverged(epoch))?;
        let metric = self.task.metric(&eval);
        if !eval.loss.is_finite() || metric.is_nan() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("validation loss {} metric {metric}", eval.loss),
            });
        }
        Ok(eval)
    }

    fn valid_record(epoch: usize, eval: &Evaluation, tau: f64) -> LogRecord {
        LogRecord {
            epoch,
            split: "valid".into(),
            loss: eval.loss,
            perplexity: eval.perplexity,
            f1: eval.f1,
            tau,
        }
    }

    /// Evaluates the initial parameters (logged as epoch 0, not used as the
    /// early-stopping baseline).
    pub fn start(&self, params: ModelParams) -> Result<TrainState> {
        let tau = anneal_tau(0, self.cfg);
        let eval = self.evaluate(&params, 0, tau)?;
        Ok(TrainState {
            epoch: 0,
            best: params.clone(),
            params,
            adam: AdamState::default(),
            stopper: EarlyStopping::new(self.cfg.patience, self.task.higher_is_better()),
            best_epoch: 0,
            best_eval: None,
            best_tau: tau,
            stopped: false,
            log: vec![Self::valid_record(0, &eval, tau)],
        })
    }

    fn train_epoch(&self, state: &mut TrainState, epoch: usize, reader: &ReaderConfig) -> Result<f64> {
        let mut order: Vec<usize> = (0..self.task.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, epoch, usize::MAX)));
        let (mut total, mut count) = (0.0, 0usize);
        for i in order {
            let mut tape = Tape::new();
            let pv = ParamVars::register(&mut tape, &state.params);
            let seed = derive_seed(self.cfg.seed, epoch, i);
            let Some(loss) = self.task.loss(&mut tape, &pv, reader, self.cfg, i, seed)? else {
                continue;
            };
            let value = tape.scalar(loss);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    op: format!("training loss of example {i}"),
                });
            }
            let mut grads = tape.backward(loss)?;
            // release the tape's handles on the parameters so the update below writes in place
            drop(tape);
            clip_global_norm(&mut grads, self.cfg.clip_norm);
            adam_step(&mut state.params, &grads, &mut state.adam, self.cfg)?;
            if !state.params.all_finite() {
                return Err(Error::NonFinite {
                    op: format!("parameters after example {i}"),
                });
            }
            total += value;
            count += 1;
        }
        Ok(if count == 0 { 0.0 } else { total / count as f64 })
    }

    /// Trains until early stopping, `epochs_max`, or (if given) until
    /// `until` epochs have completed. The state stays usable after an
    /// error, holding the log up to the failure.
    pub fn run(&self, state: &mut TrainState, until: Option<usize>) -> Result<()> {
        let limit = until.map_or(self.cfg.epochs_max, |u| u.min(self.cfg.epochs_max));
        while !state.stopped && state.epoch < limit {
            let epoch = state.epoch + 1;
            let tau = anneal_tau(epoch - 1, self.cfg);
            let reader = self.reader_at(tau);
            let train_loss = self.train_epoch(state, epoch, &reader).map_err(diverged(epoch))?;
            state.log.push(LogRecord {
                epoch,
                split: "train".into(),
                loss: train_loss,
                perplexity: None,
                f1: None,
                tau,
            });
            let eval = self.evaluate(&state.params, epoch, tau)?;
            state.log.push(Self::valid_record(epoch, &eval, tau));
            let metric = self.task.metric(&eval);
            log::info!("epoch {epoch}: train loss {train_loss:.5}, valid loss {:.5}, metric {metric:.5}", eval.loss);
            match state.stopper.observe(epoch, metric) {
                Progress::Improved => {
                    state.best = state.params.clone();
                    state.best_epoch = epoch;
                    state.best_eval = Some(eval);
                    state.best_tau = tau;
                }
                Progress::NoImprovement => {}
                Progress::Stop => state.stopped = true,
            }
            state.epoch = epoch;
        }
        Ok(())
    }

    pub fn finish(&self, state: TrainState) -> TrainOutcome {
        TrainOutcome {
            reader: self.reader_at(state.best_tau),
            params: state.best,
            best_epoch: state.best_epoch,
            best_eval: state.best_eval,
            epochs_run: state.epoch,
            log: state.log,
        }
    }

    pub fn train(&self, params: ModelParams) -> Result<TrainOutcome> {
        let mut state = self.start(params)?;
        self.run(&mut state, None)?;
        Ok(self.finish(state))
    }
}

/// Language-model pretraining through the full reader.
pub fn pretrain_lm(
    params: ModelParams,
    reader: &ReaderConfig,
    train: &[Vec<usize>],
    valid: &[Vec<usize>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let task = LmTask { train, valid };
    Trainer::new(&task, reader, cfg)?.train(params)
}

/// Coreference training from `params`, which are either fresh (with frozen
/// embeddings) or warm-started from a pretrained model.
pub fn train_coref(
    params: ModelParams,
    reader: &ReaderConfig,
    train: &[TokenizedInstance],
    valid: &[TokenizedInstance],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Contract("coreference training set is empty".into()));
    }
    let task = CorefTask::new(train, valid, Vocabulary::default().start_id())?;
    Trainer::new(&task, reader, cfg)?.train(params)
}
