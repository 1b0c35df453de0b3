//! Flat `key = value` run configuration.

use std::collections::BTreeSet;
use std::str::FromStr;

use refreader_core::reader::ReaderConfig;
use refreader_core::trainer::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub reader: ReaderConfig,
    pub train: TrainConfig,
    /// Minimum token count for the vocabulary.
    pub min_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reader: ReaderConfig::default(),
            train: TrainConfig::default(),
            min_count: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for key {key}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let (r, t) = (&mut self.reader, &mut self.train);
        match key {
            "cells" => r.cells = parse(key, value)?,
            "embed_dim" => r.embed_dim = parse(key, value)?,
            "key_dim" => r.key_dim = parse(key, value)?,
            "value_dim" => r.value_dim = parse(key, value)?,
            "hidden_dim" => r.hidden_dim = parse(key, value)?,
            "query_hidden_dim" => r.query_hidden_dim = parse(key, value)?,
            "entity_half_life" => r.entity_half_life = parse(key, value)?,
            "nonentity_half_life" => r.nonentity_half_life = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "beta1" => t.beta1 = parse(key, value)?,
            "beta2" => t.beta2 = parse(key, value)?,
            "epsilon" => t.epsilon = parse(key, value)?,
            "epochs_max" => t.epochs_max = parse(key, value)?,
            "patience" => t.patience = parse(key, value)?,
            "tau_init" => t.tau_init = parse(key, value)?,
            "tau_decay" => t.tau_decay = parse(key, value)?,
            "tau_every" => t.tau_every = parse(key, value)?,
            "tau_min" => t.tau_min = parse(key, value)?,
            "dropout" => t.dropout = parse(key, value)?,
            "weight_self" => t.weights.self_link = parse(key, value)?,
            "weight_coref" => t.weights.coref = parse(key, value)?,
            "neg_ratio" => t.weights.neg_ratio = parse(key, value)?,
            "lm_weight" => t.lm_weight = parse(key, value)?,
            "clip_norm" => t.clip_norm = parse(key, value)?,
            "grid_step" => t.grid_step = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "min_count" => self.min_count = parse(key, value)?,
            _ => return Err(format!("unknown config key {key:?}")),
        }
        self.reader.tau = self.train.tau_init;
        self.reader.dropout = self.train.dropout;
        Ok(())
    }

    /// Applies a config file's text on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(format!("line {}: duplicate key {key}", n + 1));
            }
            self.set(key, value.trim()).map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    /// Every key with its resolved value, in a form `apply_text` reads back.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let (r, t) = (&self.reader, &self.train);
        vec![
            ("cells", r.cells.to_string()),
            ("embed_dim", r.embed_dim.to_string()),
            ("key_dim", r.key_dim.to_string()),
            ("value_dim", r.value_dim.to_string()),
            ("hidden_dim", r.hidden_dim.to_string()),
            ("query_hidden_dim", r.query_hidden_dim.to_string()),
            ("entity_half_life", r.entity_half_life.to_string()),
            ("nonentity_half_life", r.nonentity_half_life.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("beta1", t.beta1.to_string()),
            ("beta2", t.beta2.to_string()),
            ("epsilon", t.epsilon.to_string()),
            ("epochs_max", t.epochs_max.to_string()),
            ("patience", t.patience.to_string()),
            ("tau_init", t.tau_init.to_string()),
            ("tau_decay", t.tau_decay.to_string()),
            ("tau_every", t.tau_every.to_string()),
            ("tau_min", t.tau_min.to_string()),
            ("dropout", t.dropout.to_string()),
            ("weight_self", t.weights.self_link.to_string()),
            ("weight_coref", t.weights.coref.to_string()),
            ("neg_ratio", t.weights.neg_ratio.to_string()),
            ("lm_weight", t.lm_weight.to_string()),
            ("clip_norm", t.clip_norm.to_string()),
            ("grid_step", t.grid_step.to_string()),
            ("seed", t.seed.to_string()),
            ("min_count", self.min_count.to_string()),
        ]
    }

    /// Config echo: comment lines first, then every key.
    pub fn echo(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
