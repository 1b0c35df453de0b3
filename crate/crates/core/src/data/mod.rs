//! GAP ingestion, tokenization, vocabulary, embedding files and
//! language-model corpora.

mod corpus;
mod embeddings;
mod gap;
mod synthetic;
mod tokenize;
mod vocab;

pub use corpus::{encode_paragraphs, paragraphs, prepare_lm_corpus, read_paragraphs};
pub use embeddings::{load_embeddings, read_embeddings, CoverageReport, INIT_RANGE};
pub use gap::{
    align_spans, concatenate, gap_tsv_header, parse_gap_tsv, prepare_instance, GapInstance, Mention, TokenSpan,
    TokenizedInstance, GAP_HEADER,
};
pub use synthetic::template_corpus;
pub use tokenize::{tokenize, Token};
pub use vocab::{fold, Vocabulary, END, START, UNK};

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use crate::error::{Error, Result};

pub fn load_gap_tsv(path: &Path) -> Result<Vec<GapInstance>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_gap_tsv(BufReader::new(file))
}
