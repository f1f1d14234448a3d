use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Text normalization applied identically to gold and recognized text.
/// Punctuation other than apostrophes is always stripped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextNormalizer {
    pub lowercase: bool,
}

impl Default for TextNormalizer {
    fn default() -> Self {
        TextNormalizer { lowercase: true }
    }
}

impl TextNormalizer {
    pub fn words(&self, text: &str) -> Vec<String> {
        text.split_whitespace()
            .filter_map(|token| {
                let kept: String = token
                    .chars()
                    .filter(|c| c.is_alphanumeric() || *c == '\'')
                    .collect();
                if kept.is_empty() {
                    None
                } else if self.lowercase {
                    Some(kept.to_lowercase())
                } else {
                    Some(kept)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelItem {
    pub id: String,
    pub gold: Vec<String>,
    /// Recognized words; empty when the recognizer deleted everything.
    pub hyp: Vec<String>,
}

/// Gold/recognized transcript pairs in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    items: Vec<ParallelItem>,
}

impl ParallelCorpus {
    pub fn new(items: Vec<ParallelItem>) -> Result<Self> {
        let mut ids = HashSet::new();
        for item in &items {
            if !ids.insert(item.id.as_str()) {
                return Err(Error::Duplicate(item.id.clone()));
            }
            if item.gold.is_empty() {
                return Err(Error::Contract(format!("empty gold text for {}", item.id)));
            }
        }
        Ok(ParallelCorpus { items })
    }

    /// Parses `id<TAB>gold<TAB>recognized` lines.
    pub fn parse(text: &str, source: &str, normalizer: &TextNormalizer) -> Result<Self> {
        let mut items = Vec::new();
        let mut ids = HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    source,
                    lineno + 1,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let id = fields[0].trim().to_string();
            if !ids.insert(id.clone()) {
                return Err(Error::Duplicate(id));
            }
            let gold = normalizer.words(fields[1]);
            if gold.is_empty() {
                return Err(Error::parse(source, lineno + 1, "gold text is empty"));
            }
            items.push(ParallelItem {
                id,
                gold,
                hyp: normalizer.words(fields[2]),
            });
        }
        Ok(ParallelCorpus { items })
    }

    pub fn items(&self) -> &[ParallelItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn split_at(&self, mid: usize) -> (ParallelCorpus, ParallelCorpus) {
        let (a, b) = self.items.split_at(mid.min(self.items.len()));
        (
            ParallelCorpus { items: a.to_vec() },
            ParallelCorpus { items: b.to_vec() },
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                item.id,
                item.gold.join(" "),
                item.hyp.join(" ")
            ));
        }
        out
    }
}

pub fn load_parallel_corpus(
    path: impl AsRef<Path>,
    normalizer: &TextNormalizer,
) -> Result<ParallelCorpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ParallelCorpus::parse(&text, &path.display().to_string(), normalizer)
}
