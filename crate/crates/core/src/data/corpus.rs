use std::fs;
use std::path::{Path, PathBuf};

use super::tokenize::tokenize;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Splits text into paragraphs at blank lines and tokenizes each.
pub fn paragraphs(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.extend(tokenize(line).into_iter().map(|t| t.text));
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Tokenized paragraphs of every file, in path order.
pub fn read_paragraphs<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for p in paths {
        let path: PathBuf = p.as_ref().to_path_buf();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        out.extend(paragraphs(&text));
    }
    Ok(out)
}

/// `<s> w1 … wn </s>` with out-of-vocabulary tokens mapped to `<unk>`.
pub fn encode_paragraphs(paragraphs: &[Vec<String>], vocab: &Vocabulary) -> Vec<Vec<usize>> {
    paragraphs
        .iter()
        .map(|p| {
            let mut ids = Vec::with_capacity(p.len() + 2);
            ids.push(vocab.start_id());
            ids.extend(vocab.encode(p));
            ids.push(vocab.end_id());
            ids
        })
        .collect()
}

pub fn prepare_lm_corpus<P: AsRef<Path>>(paths: &[P], vocab: &Vocabulary) -> Result<Vec<Vec<usize>>> {
    Ok(encode_paragraphs(&read_paragraphs(paths)?, vocab))
}
