//! Optimization loops for language-model pretraining and coreference
//! training, with Adam, temperature annealing, early stopping and
//! checkpoints.

mod adam;
mod checkpoint;
mod config;
mod run;
mod schedule;
mod tasks;

pub use adam::{adam_step, clip_global_norm, global_norm, AdamState};
pub use checkpoint::Checkpoint;
pub use config::TrainConfig;
pub use run::{derive_seed, pretrain_lm, train_coref, LogRecord, TrainOutcome, TrainState, Trainer};
pub use schedule::{anneal_tau, EarlyStopping, Progress};
pub use tasks::{CorefExample, CorefTask, Evaluation, LmTask, Task};
