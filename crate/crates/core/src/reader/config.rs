use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sizes and dynamics of a referential reader.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReaderConfig {
    /// Number of memory cells.
    pub cells: usize,
    pub embed_dim: usize,
    pub key_dim: usize,
    pub value_dim: usize,
    pub hidden_dim: usize,
    /// Width of the hidden layer of the query network.
    pub query_hidden_dim: usize,
    /// Entity mentions before salience halves.
    pub entity_half_life: f64,
    /// Tokens before salience halves when no entity is seen.
    pub nonentity_half_life: f64,
    /// Gumbel-softmax temperature used for overwrite selection.
    pub tau: f64,
    pub dropout: f64,
}

impl Default for ReaderConfig {
    fn default() -> Self {
        ReaderConfig {
            cells: 2,
            embed_dim: 300,
            key_dim: 16,
            value_dim: 300,
            hidden_dim: 300,
            query_hidden_dim: 16,
            entity_half_life: 4.0,
            nonentity_half_life: 30.0,
            tau: 1.0,
            dropout: 0.5,
        }
    }
}

/// `exp(ln(0.5) / half_life)`: the per-step factor that halves a quantity
/// after `half_life` steps.
pub fn decay_rate(half_life: f64) -> f64 {
    (0.5f64.ln() / half_life).exp()
}

impl ReaderConfig {
    /// Small configuration with every size set to `dim`.
    pub fn uniform(cells: usize, dim: usize) -> Self {
        ReaderConfig {
            cells,
            embed_dim: dim,
            key_dim: dim,
            value_dim: dim,
            hidden_dim: dim,
            query_hidden_dim: dim,
            ..Default::default()
        }
    }

    pub fn gamma_entity(&self) -> f64 {
        decay_rate(self.entity_half_life)
    }

    pub fn gamma_nonentity(&self) -> f64 {
        decay_rate(self.nonentity_half_life)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("cells", self.cells),
            ("embed_dim", self.embed_dim),
            ("key_dim", self.key_dim),
            ("value_dim", self.value_dim),
            ("hidden_dim", self.hidden_dim),
            ("query_hidden_dim", self.query_hidden_dim),
        ];
        for (name, value) in dims {
            if value == 0 {
                return Err(Error::Contract(format!("{name} must be at least 1")));
            }
        }
        if !(self.entity_half_life > 0.0 && self.nonentity_half_life > 0.0) {
            return Err(Error::Contract("half-lives must be positive".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Contract(format!("tau must be positive, got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Contract(format!("dropout must lie in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}
