use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const START: &str = "<s>";
pub const END: &str = "</s>";

/// Case-folded token ↔ id map. Ids 0, 1, 2 are `<unk>`, `<s>`, `</s>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, usize>,
    tokens: Vec<String>,
}

pub fn fold(token: &str) -> String {
    token.to_lowercase()
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_tokens(Vec::<String>::new()).expect("specials are distinct")
    }
}

impl Vocabulary {
    /// Counts case-folded tokens and keeps those seen at least `min_count`
    /// times, ordered by frequency (descending) then lexicographically.
    pub fn build<'a, I, S>(corpora: I, min_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str> + 'a,
    {
        if min_count == 0 {
            return Err(Error::Contract("min_count must be at least 1".into()));
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for tok in corpora {
            *counts.entry(fold(tok.as_ref())).or_default() += 1;
        }
        for special in [UNK, START, END] {
            counts.remove(special);
        }
        let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_tokens(kept.into_iter().map(|(t, _)| t))
    }

    /// Specials followed by `tokens` in the given order.
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Result<Self> {
        let mut v = Vocabulary {
            ids: HashMap::new(),
            tokens: Vec::new(),
        };
        for t in [UNK, START, END].into_iter().map(str::to_string).chain(tokens) {
            if v.ids.contains_key(&t) {
                return Err(Error::Contract(format!("duplicate vocabulary entry {t:?}")));
            }
            v.ids.insert(t.clone(), v.tokens.len());
            v.tokens.push(t);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        0
    }

    pub fn start_id(&self) -> usize {
        1
    }

    pub fn end_id(&self) -> usize {
        2
    }

    pub fn is_special(&self, id: usize) -> bool {
        id < 3
    }

    /// Exact lookup of an already folded entry.
    pub fn get(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(&fold(token)).copied().unwrap_or(0)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// One entry per line, in id order.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        for (n, special) in [UNK, START, END].iter().enumerate() {
            if lines.next() != Some(*special) {
                return Err(Error::Format {
                    line: n + 1,
                    detail: format!("expected {special}"),
                });
            }
        }
        Self::from_tokens(lines.map(str::to_string))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_count_filters_rare_tokens() {
        let v = Vocabulary::build(["a", "a", "b"], 2).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("a"), 3);
        assert_eq!(v.id("b"), v.unk_id());
        let all = Vocabulary::build(["a", "a", "b"], 1).unwrap();
        assert_ne!(all.id("b"), all.unk_id());
    }

    #[test]
    fn ids_ordered_by_frequency_then_lexicographically() {
        let v = Vocabulary::build(["b", "c", "a", "c", "B"], 1).unwrap();
        assert_eq!(&v.tokens()[3..], ["b", "c", "a"]);
    }

    #[test]
    fn lookup_is_case_folded() {
        let v = Vocabulary::build(["Ahab", "ahab"], 1).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.id("AHAB"), 3);
    }

    #[test]
    fn identical_corpora_give_identical_ids() {
        let corpus = ["the", "whale", "the", "sea", "ship", "whale", "the"];
        assert_eq!(Vocabulary::build(corpus, 1).unwrap(), Vocabulary::build(corpus, 1).unwrap());
    }

    #[test]
    fn text_round_trip() {
        let v = Vocabulary::build(["x", "y", "y"], 1).unwrap();
        assert_eq!(Vocabulary::from_text(&v.to_text()).unwrap(), v);
        assert!(Vocabulary::from_text("x\ny\n").is_err());
    }

    #[test]
    fn rejects_zero_min_count() {
        assert!(Vocabulary::build(["a"], 0).is_err());
    }
}
