//! Fixtures shared by the benchmarks under `benches/`.

use refreader_core::reader::{ModelParams, ReaderConfig};

/// A reader of width `dim` with `cells` cells over a vocabulary of 200.
pub fn model(cells: usize, dim: usize) -> (ReaderConfig, ModelParams) {
    let reader = ReaderConfig {
        dropout: 0.5,
        ..ReaderConfig::uniform(cells, dim)
    };
    let params = ModelParams::init(&reader, 200, 1).expect("valid config");
    (reader, params)
}

/// Deterministic pseudo-random token ids below 200.
pub fn tokens(len: usize) -> Vec<usize> {
    (0..len).map(|t| 3 + (t * 37 + 11) % 197).collect()
}
