use serde::{Deserialize, Serialize};

use super::config::TrainConfig;

/// `max(tau_min, tau_init · tau_decay^⌊epoch / tau_every⌋)`
pub fn anneal_tau(epoch: usize, cfg: &TrainConfig) -> f64 {
    let k = (epoch / cfg.tau_every.max(1)) as i32;
    (cfg.tau_init * cfg.tau_decay.powi(k)).max(cfg.tau_min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Progress {
    Improved,
    NoImprovement,
    Stop,
}

/// Stops once `patience` consecutive epochs fail to beat the best metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    pub higher_is_better: bool,
    pub best: Option<f64>,
    pub best_epoch: usize,
    pub bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, higher_is_better: bool) -> Self {
        EarlyStopping {
            patience,
            higher_is_better,
            best: None,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    fn beats(&self, metric: f64) -> bool {
        match self.best {
            None => true,
            Some(b) if self.higher_is_better => metric > b,
            Some(b) => metric < b,
        }
    }

    pub fn observe(&mut self, epoch: usize, metric: f64) -> Progress {
        if self.beats(metric) {
            self.best = Some(metric);
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            return Progress::Improved;
        }
        self.bad_epochs += 1;
        if self.bad_epochs >= self.patience {
            Progress::Stop
        } else {
            Progress::NoImprovement
        }
    }
}
