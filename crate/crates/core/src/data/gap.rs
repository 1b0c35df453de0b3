use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, Token};
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

pub const GAP_HEADER: [&str; 11] = [
    "ID",
    "Text",
    "Pronoun",
    "Pronoun-offset",
    "A",
    "A-offset",
    "A-coref",
    "B",
    "B-offset",
    "B-coref",
    "URL",
];

/// A surface string and its character offset in the instance text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub text: String,
    pub offset: usize,
}

impl Mention {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn end(&self) -> usize {
        self.offset + self.char_len()
    }
}

/// One row of a GAP file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapInstance {
    pub id: String,
    pub text: String,
    pub pronoun: Mention,
    pub name_a: Mention,
    pub name_b: Mention,
    pub label_a: bool,
    pub label_b: bool,
    pub url: String,
}

fn parse_bool(field: &str, line: usize) -> Result<bool> {
    match field.trim().to_ascii_uppercase().as_str() {
        "TRUE" => Ok(true),
        "FALSE" => Ok(false),
        other => Err(Error::Parse {
            line,
            detail: format!("expected TRUE or FALSE, got {other:?}"),
        }),
    }
}

fn parse_offset(field: &str, line: usize) -> Result<usize> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        detail: format!("bad offset {field:?}"),
    })
}

impl GapInstance {
    /// Checks that every annotated surface string sits at its offset.
    pub fn validate(&self) -> Result<()> {
        let chars: Vec<char> = self.text.chars().collect();
        for (what, m) in [("pronoun", &self.pronoun), ("A", &self.name_a), ("B", &self.name_b)] {
            if m.text.is_empty() {
                return Err(Error::Validation {
                    id: self.id.clone(),
                    detail: format!("{what} mention is empty"),
                });
            }
            let found: Option<String> = chars.get(m.offset..m.end()).map(|s| s.iter().collect());
            if found.as_deref() != Some(m.text.as_str()) {
                return Err(Error::Validation {
                    id: self.id.clone(),
                    detail: format!(
                        "{what} {:?} not found at offset {} (text there: {:?})",
                        m.text,
                        m.offset,
                        found.unwrap_or_default()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Row in GAP column order (without trailing newline).
    pub fn to_tsv_row(&self) -> String {
        let b = |v: bool| if v { "TRUE" } else { "FALSE" };
        [
            self.id.clone(),
            self.text.clone(),
            self.pronoun.text.clone(),
            self.pronoun.offset.to_string(),
            self.name_a.text.clone(),
            self.name_a.offset.to_string(),
            b(self.label_a).to_string(),
            self.name_b.text.clone(),
            self.name_b.offset.to_string(),
            b(self.label_b).to_string(),
            self.url.clone(),
        ]
        .join("\t")
    }
}

/// Parses a GAP TSV stream with its header row.
pub fn parse_gap_tsv<R: BufRead>(reader: R) -> Result<Vec<GapInstance>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::Parse {
            line: 1,
            detail: e.to_string(),
        })?,
        None => {
            return Err(Error::Parse {
                line: 1,
                detail: "missing header row".into(),
            })
        }
    };
    let header_fields: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if header_fields != GAP_HEADER {
        return Err(Error::Parse {
            line: 1,
            detail: format!("expected header {:?}, got {:?}", GAP_HEADER, header_fields),
        });
    }

    let mut out = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: n,
            detail: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != GAP_HEADER.len() {
            return Err(Error::Parse {
                line: n,
                detail: format!("expected {} columns, got {}", GAP_HEADER.len(), f.len()),
            });
        }
        let instance = GapInstance {
            id: f[0].to_string(),
            text: f[1].to_string(),
            pronoun: Mention {
                text: f[2].to_string(),
                offset: parse_offset(f[3], n)?,
            },
            name_a: Mention {
                text: f[4].to_string(),
                offset: parse_offset(f[5], n)?,
            },
            label_a: parse_bool(f[6], n)?,
            name_b: Mention {
                text: f[7].to_string(),
                offset: parse_offset(f[8], n)?,
            },
            label_b: parse_bool(f[9], n)?,
            url: f[10].to_string(),
        };
        instance.validate()?;
        out.push(instance);
    }
    Ok(out)
}

pub fn gap_tsv_header() -> String {
    GAP_HEADER.join("\t")
}

/// Inclusive token index range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub first: usize,
    pub last: usize,
}

impl TokenSpan {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    pub fn contains(&self, i: usize) -> bool {
        self.first <= i && i <= self.last
    }
}

/// A GAP instance mapped onto tokens and vocabulary ids.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenizedInstance {
    pub id: String,
    pub tokens: Vec<Token>,
    pub ids: Vec<usize>,
    pub pronoun: String,
    pub pronoun_index: usize,
    pub span_a: TokenSpan,
    pub span_b: TokenSpan,
    pub label_a: bool,
    pub label_b: bool,
}

fn overlapping(tokens: &[Token], start: usize, end: usize) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| t.start < end && start < t.end)
        .map(|(i, _)| i)
        .collect()
}

fn span_of(id: &str, what: &str, tokens: &[Token], m: &Mention) -> Result<TokenSpan> {
    let hits = overlapping(tokens, m.offset, m.end());
    match (hits.first(), hits.last()) {
        (Some(&first), Some(&last)) => Ok(TokenSpan { first, last }),
        _ => Err(Error::Alignment {
            id: id.to_string(),
            detail: format!("{what} {:?} at {} covers no token", m.text, m.offset),
        }),
    }
}

/// Maps character-level annotations onto token indices: a span covers every
/// token that overlaps the mention's character range.
pub fn align_spans(instance: &GapInstance, tokens: Vec<Token>, vocab: &Vocabulary) -> Result<TokenizedInstance> {
    let hits = overlapping(&tokens, instance.pronoun.offset, instance.pronoun.end());
    if hits.len() != 1 {
        return Err(Error::Alignment {
            id: instance.id.clone(),
            detail: format!("pronoun {:?} covers {} tokens, expected exactly one", instance.pronoun.text, hits.len()),
        });
    }
    let span_a = span_of(&instance.id, "A", &tokens, &instance.name_a)?;
    let span_b = span_of(&instance.id, "B", &tokens, &instance.name_b)?;
    let ids = vocab.encode(&tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>());
    Ok(TokenizedInstance {
        id: instance.id.clone(),
        tokens,
        ids,
        pronoun: instance.pronoun.text.clone(),
        pronoun_index: hits[0],
        span_a,
        span_b,
        label_a: instance.label_a,
        label_b: instance.label_b,
    })
}

/// Tokenizes and aligns in one step.
pub fn prepare_instance(instance: &GapInstance, vocab: &Vocabulary) -> Result<TokenizedInstance> {
    align_spans(instance, tokenize(&instance.text), vocab)
}

/// Joins two instances into one text separated by a space, keeping the
/// annotations of `second` with shifted offsets.
pub fn concatenate(first: &GapInstance, second: &GapInstance) -> GapInstance {
    let shift = first.text.chars().count() + 1;
    let moved = |m: &Mention| Mention {
        text: m.text.clone(),
        offset: m.offset + shift,
    };
    GapInstance {
        id: format!("{}+{}", first.id, second.id),
        text: format!("{} {}", first.text, second.text),
        pronoun: moved(&second.pronoun),
        name_a: moved(&second.name_a),
        name_b: moved(&second.name_b),
        label_a: second.label_a,
        label_b: second.label_b,
        url: second.url.clone(),
    }
}
