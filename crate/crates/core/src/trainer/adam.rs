use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::autodiff::{Gradients, Parameters};
use crate::error::{Error, Result};
use crate::reader::ModelParams;

/// First and second moment estimates per parameter, and the step count.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub t: u64,
    pub m: BTreeMap<String, Vec<f64>>,
    pub v: BTreeMap<String, Vec<f64>>,
}

/// One bias-corrected Adam update. Frozen parameters and parameters
/// without a gradient are left alone, as are parameters that have only
/// ever seen zero gradients (their moments and update would be zero).
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    for (name, g) in grads {
        if !g.is_finite() {
            return Err(Error::NonFinite {
                op: format!("gradient of {name}"),
            });
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (name, g) in grads {
        if params.is_frozen(name) {
            continue;
        }
        let Some(p) = params.tensor_mut(name) else {
            return Err(Error::Contract(format!("gradient for unknown parameter {name}")));
        };
        if p.numel() != g.numel() {
            return Err(Error::dim("adam", format!("{name}: {} values vs gradient {}", p.numel(), g.numel())));
        }
        if !state.m.contains_key(name) && g.data().iter().all(|&x| x == 0.0) {
            continue;
        }
        let n = g.numel();
        let m = state.m.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
        let v = state.v.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
        for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

pub fn global_norm(grads: &Gradients) -> f64 {
    grads.values().map(|g| g.sum_squares()).sum::<f64>().sqrt()
}

/// Rescales all gradients so their joint norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        for g in grads.values_mut() {
            g.data_mut().iter_mut().for_each(|x| *x *= s);
        }
    }
    norm
}
