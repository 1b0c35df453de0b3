use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::LossWeights;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs_max: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub tau_init: f64,
    pub tau_decay: f64,
    /// Epochs between temperature decays.
    pub tau_every: usize,
    pub tau_min: f64,
    pub dropout: f64,
    pub weights: LossWeights,
    /// Weight of the language-model loss added to the coreference loss
    /// during coreference training; 0 keeps the two phases separate.
    pub lm_weight: f64,
    /// Global gradient-norm bound; 0 disables clipping.
    pub clip_norm: f64,
    /// Threshold grid used for validation F1.
    pub grid_step: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs_max: 100,
            patience: 10,
            tau_init: 1.0,
            tau_decay: 0.5,
            tau_every: 10,
            tau_min: 0.1,
            dropout: 0.5,
            weights: LossWeights::default(),
            lm_weight: 0.0,
            clip_norm: 5.0,
            grid_step: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Contract(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if !(self.tau_min > 0.0 && self.tau_init >= self.tau_min && self.tau_init.is_finite()) {
            return bad(format!("need tau_init >= tau_min > 0, got {} and {}", self.tau_init, self.tau_min));
        }
        if !(self.tau_decay > 0.0 && self.tau_decay <= 1.0) {
            return bad(format!("tau_decay must lie in (0, 1], got {}", self.tau_decay));
        }
        if self.tau_every == 0 {
            return bad("tau_every must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.clip_norm >= 0.0) {
            return bad(format!("clip_norm must be non-negative, got {}", self.clip_norm));
        }
        if !(self.grid_step > 0.0 && self.grid_step < 1.0) {
            return bad(format!("grid_step must lie in (0, 1), got {}", self.grid_step));
        }
        if !(self.lm_weight >= 0.0 && self.lm_weight.is_finite()) {
            return bad(format!("lm_weight must be finite and non-negative, got {}", self.lm_weight));
        }
        let w = &self.weights;
        if [w.self_link, w.coref, w.neg_ratio].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("loss weights must be finite and non-negative".into());
        }
        Ok(())
    }
}
