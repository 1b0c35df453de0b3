use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{fold, Vocabulary};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Rows not found in the embedding file are drawn from `±INIT_RANGE`.
pub const INIT_RANGE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    /// Regular (non-special) vocabulary entries found in the file.
    pub covered: usize,
    pub total: usize,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

/// Reads a whitespace-separated text embedding file (`token v1 … vD` per
/// line). Lookup is case-folded and the first occurrence of a token wins.
pub fn read_embeddings<R: BufRead>(reader: R, vocab: &Vocabulary, dim: usize, seed: u64) -> Result<(Tensor, CoverageReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<f64> = (0..vocab.len() * dim).map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE)).collect();
    let mut filled = vec![false; vocab.len()];

    for (idx, line) in reader.lines().enumerate() {
        let n = idx + 1;
        let line = line.map_err(|e| Error::Format {
            line: n,
            detail: e.to_string(),
        })?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::Format {
                line: n,
                detail: format!("expected {dim} values after {token:?}, got {}", values.len()),
            });
        }
        let Some(id) = vocab.get(&fold(token)) else { continue };
        if vocab.is_special(id) || filled[id] {
            continue;
        }
        for (k, v) in values.iter().enumerate() {
            let x: f64 = v.parse().map_err(|_| Error::Format {
                line: n,
                detail: format!("bad number {v:?}"),
            })?;
            if !x.is_finite() {
                return Err(Error::Format {
                    line: n,
                    detail: format!("non-finite value {v:?}"),
                });
            }
            data[id * dim + k] = x;
        }
        filled[id] = true;
    }

    let report = CoverageReport {
        covered: filled.iter().filter(|&&f| f).count(),
        total: vocab.len().saturating_sub(3),
    };
    Ok((Tensor::matrix(vocab.len(), dim, data)?, report))
}

pub fn load_embeddings(path: &Path, vocab: &Vocabulary, dim: usize, seed: u64) -> Result<(Tensor, CoverageReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), vocab, dim, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["ahab".to_string(), "whale".to_string()]).unwrap()
    }

    #[test]
    fn full_coverage() {
        let text = "Ahab 0.1 0.2\nwhale -1 2\nsea 3 3\n";
        let (t, r) = read_embeddings(text.as_bytes(), &vocab(), 2, 0).unwrap();
        assert_eq!(r.fraction(), 1.0);
        assert_eq!(t.row(3), &[0.1, 0.2]);
        assert_eq!(t.row(4), &[-1.0, 2.0]);
    }

    #[test]
    fn empty_file_leaves_random_rows() {
        let (t, r) = read_embeddings("".as_bytes(), &vocab(), 3, 5).unwrap();
        assert_eq!(r.fraction(), 0.0);
        assert!(t.data().iter().all(|v| v.abs() <= INIT_RANGE));
        let (again, _) = read_embeddings("".as_bytes(), &vocab(), 3, 5).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn wrong_arity_is_reported_with_line() {
        let text = "ahab 0.1 0.2\nwhale 1\n";
        match read_embeddings(text.as_bytes(), &vocab(), 2, 0) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_embeddings(Path::new("/nonexistent/glove.txt"), &vocab(), 2, 0).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/glove.txt"));
    }
}
