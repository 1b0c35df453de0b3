use serde::{Deserialize, Serialize};

use super::config::ReaderConfig;

/// Full incremental state: one (key, value, salience) triple per cell plus
/// the recurrent hidden state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryState {
    pub keys: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub salience: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl MemoryState {
    /// All zeros: the first mention is forced to overwrite.
    pub fn zeros(config: &ReaderConfig) -> Self {
        MemoryState {
            keys: vec![vec![0.0; config.key_dim]; config.cells],
            values: vec![vec![0.0; config.value_dim]; config.cells],
            salience: vec![0.0; config.cells],
            hidden: vec![0.0; config.hidden_dim],
        }
    }

    pub fn cells(&self) -> usize {
        self.salience.len()
    }
}

/// Scalar gates and intermediates produced while reading one token.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    /// Entity gate.
    pub e: f64,
    /// Reference gate.
    pub r: f64,
    /// Memory-importance gate of the recurrent update.
    pub c: f64,
    /// Salience decay factor.
    pub lambda: f64,
    /// Salience-weighted memory summary, in hidden-state space.
    pub m: Vec<f64>,
    pub query: Vec<f64>,
    pub key_candidate: Vec<f64>,
    pub value_candidate: Vec<f64>,
    pub alpha: Vec<f64>,
    pub u: Vec<f64>,
    pub o: Vec<f64>,
    pub copy: Vec<f64>,
    /// Salience after this token.
    pub salience: Vec<f64>,
}

impl GateRecord {
    pub fn cells(&self) -> usize {
        self.u.len()
    }

    /// `|Σ(u + o) - e|`
    pub fn entity_mass_gap(&self) -> f64 {
        let stored: f64 = self.u.iter().zip(&self.o).map(|(u, o)| u + o).sum();
        (stored - self.e).abs()
    }
}

/// One line of the gate trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub token_index: usize,
    pub token_text: String,
    pub e: f64,
    pub r: f64,
    pub c: f64,
    pub lambda: f64,
    pub cells: Vec<CellTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTrace {
    pub alpha: f64,
    pub u: f64,
    pub o: f64,
    pub copy: f64,
    pub salience: f64,
}

impl TraceRecord {
    pub fn from_gates(token_index: usize, token_text: &str, g: &GateRecord) -> Self {
        let cells = (0..g.cells())
            .map(|i| CellTrace {
                alpha: g.alpha[i],
                u: g.u[i],
                o: g.o[i],
                copy: g.copy[i],
                salience: g.salience[i],
            })
            .collect();
        TraceRecord {
            token_index,
            token_text: token_text.to_string(),
            e: g.e,
            r: g.r,
            c: g.c,
            lambda: g.lambda,
            cells,
        }
    }

    /// Tab-separated rendering: scalar fields then `alpha,u,o,copy,salience` per cell.
    pub fn to_tsv(&self) -> String {
        let mut fields = vec![
            self.token_index.to_string(),
            self.token_text.replace(['\t', '\n'], " "),
            self.e.to_string(),
            self.r.to_string(),
            self.c.to_string(),
            self.lambda.to_string(),
        ];
        for c in &self.cells {
            fields.extend([c.alpha, c.u, c.o, c.copy, c.salience].iter().map(f64::to_string));
        }
        fields.join("\t")
    }

    pub fn tsv_header(cells: usize) -> String {
        let mut fields: Vec<String> = ["token_index", "token_text", "e", "r", "c", "lambda"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for i in 0..cells {
            for f in ["alpha", "u", "o", "copy", "salience"] {
                fields.push(format!("{f}{i}"));
            }
        }
        fields.join("\t")
    }
}
