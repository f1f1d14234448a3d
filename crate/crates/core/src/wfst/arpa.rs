use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::{StateId, SymbolTable, Transition, WeightedFst, EPSILON};
use crate::error::{Error, Result};

pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";

const LN_10: f64 = std::f64::consts::LN_10;

/// Log10 probability of a token that is never predicted.
const NEVER: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramEntry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

/// A backoff n-gram model in ARPA form. `ngrams[k]` holds the (k+1)-grams.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArpaModel {
    ngrams: Vec<BTreeMap<Vec<String>, NgramEntry>>,
}

impl ArpaModel {
    pub fn order(&self) -> usize {
        self.ngrams.len()
    }

    pub fn ngrams(&self, order: usize) -> &BTreeMap<Vec<String>, NgramEntry> {
        &self.ngrams[order - 1]
    }

    pub fn get(&self, words: &[String]) -> Option<&NgramEntry> {
        self.ngrams.get(words.len().checked_sub(1)?)?.get(words)
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.ngrams
            .first()
            .into_iter()
            .flat_map(|m| m.keys().map(|k| k[0].as_str()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(source, line, msg);
        let mut declared: Vec<usize> = Vec::new();
        let mut ngrams: Vec<BTreeMap<Vec<String>, NgramEntry>> = Vec::new();
        let mut section: Option<usize> = None;
        let mut seen_data = false;
        let mut ended = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || ended {
                continue;
            }
            if line == "\\data\\" {
                seen_data = true;
                continue;
            }
            if line == "\\end\\" {
                ended = true;
                continue;
            }
            if !seen_data {
                continue;
            }
            if let Some(rest) = line.strip_prefix("ngram ") {
                let (n, count) = rest
                    .split_once('=')
                    .ok_or_else(|| err(line_no, format!("bad count line {line:?}")))?;
                let n: usize = n.trim().parse().map_err(|_| err(line_no, format!("bad order {n:?}")))?;
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| err(line_no, format!("bad count {count:?}")))?;
                if n != declared.len() + 1 {
                    return Err(err(line_no, format!("ngram order {n} out of sequence")));
                }
                declared.push(count);
                continue;
            }
            if let Some(header) = line.strip_prefix('\\').and_then(|l| l.strip_suffix("-grams:")) {
                let n: usize = header
                    .parse()
                    .map_err(|_| err(line_no, format!("bad section header {line:?}")))?;
                if n == 0 || n > declared.len() || n != ngrams.len() + 1 {
                    return Err(err(line_no, format!("unexpected section for order {n}")));
                }
                ngrams.push(BTreeMap::new());
                section = Some(n);
                continue;
            }
            let n = section.ok_or_else(|| err(line_no, format!("entry outside an n-gram section: {line:?}")))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let log10_backoff = match fields.len() {
                l if l == n + 1 => None,
                l if l == n + 2 => Some(
                    fields[n + 1]
                        .parse::<f64>()
                        .map_err(|_| err(line_no, format!("bad backoff {:?}", fields[n + 1])))?,
                ),
                _ => return Err(err(line_no, format!("expected {n}-gram entry, got {line:?}"))),
            };
            let log10_prob: f64 = fields[0]
                .parse()
                .map_err(|_| err(line_no, format!("bad probability {:?}", fields[0])))?;
            if log10_prob > 0.0 {
                return Err(err(line_no, format!("log10 probability {log10_prob} > 0")));
            }
            let key: Vec<String> = fields[1..=n].iter().map(|w| w.to_string()).collect();
            if ngrams[n - 1]
                .insert(key, NgramEntry { log10_prob, log10_backoff })
                .is_some()
            {
                return Err(err(line_no, format!("repeated n-gram {line:?}")));
            }
        }

        let last = text.lines().count();
        if !seen_data {
            return Err(err(last.max(1), "missing \\data\\ header".into()));
        }
        if !ended {
            return Err(err(last.max(1), "missing \\end\\ marker".into()));
        }
        if declared.is_empty() || declared.len() > 3 {
            return Err(err(last.max(1), format!("unsupported order {}", declared.len())));
        }
        if ngrams.len() != declared.len() {
            return Err(err(last, format!("declared {} orders but found {}", declared.len(), ngrams.len())));
        }
        for (k, (map, &count)) in ngrams.iter().zip(&declared).enumerate() {
            if map.len() != count {
                return Err(err(last, format!("{}-grams: declared {count}, found {}", k + 1, map.len())));
            }
        }
        Ok(ArpaModel { ngrams })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for (k, map) in self.ngrams.iter().enumerate() {
            let _ = writeln!(out, "ngram {}={}", k + 1, map.len());
        }
        for (k, map) in self.ngrams.iter().enumerate() {
            let _ = write!(out, "\n\\{}-grams:\n", k + 1);
            for (words, e) in map {
                let _ = write!(out, "{}\t{}", e.log10_prob, words.join(" "));
                if let Some(b) = e.log10_backoff {
                    let _ = write!(out, "\t{b}");
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    /// Bigram model with add-one unigrams and absolutely discounted bigrams.
    ///
    /// The unigram vocabulary is every word in `sentences` and `extra_vocab`
    /// plus the sentence-end token. Backoff weights renormalize the unseen
    /// continuations of each context exactly.
    pub fn estimate<S: AsRef<str>>(sentences: &[Vec<S>], extra_vocab: &[S], discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::Contract(format!("discount must be in [0, 1), got {discount}")));
        }
        let mut unigram: BTreeMap<String, u64> = BTreeMap::new();
        let mut bigram: BTreeMap<(String, String), u64> = BTreeMap::new();
        for w in extra_vocab {
            unigram.entry(w.as_ref().to_string()).or_default();
        }
        unigram.entry(SENTENCE_END.to_string()).or_default();
        for sentence in sentences {
            let mut prev = SENTENCE_START.to_string();
            for w in sentence.iter().map(|w| w.as_ref().to_string()).chain([SENTENCE_END.to_string()]) {
                *unigram.entry(w.clone()).or_default() += 1;
                *bigram.entry((prev, w.clone())).or_default() += 1;
                prev = w;
            }
        }
        if unigram.contains_key(SENTENCE_START) {
            return Err(Error::Contract(format!("{SENTENCE_START} may not appear as a word")));
        }
        let total: u64 = unigram.values().sum();
        let denom = (total + unigram.len() as u64) as f64;
        let p_uni: BTreeMap<&str, f64> = unigram
            .iter()
            .map(|(w, &c)| (w.as_str(), (c + 1) as f64 / denom))
            .collect();

        let mut contexts: BTreeMap<&str, Vec<(&str, u64)>> = BTreeMap::new();
        for ((h, w), &c) in &bigram {
            contexts.entry(h.as_str()).or_default().push((w.as_str(), c));
        }

        let mut uni = BTreeMap::new();
        let mut bi = BTreeMap::new();
        for (w, &p) in &p_uni {
            uni.insert(vec![w.to_string()], NgramEntry { log10_prob: p.log10(), log10_backoff: None });
        }
        uni.insert(
            vec![SENTENCE_START.to_string()],
            NgramEntry { log10_prob: NEVER, log10_backoff: None },
        );
        for (h, followers) in contexts {
            let count: u64 = followers.iter().map(|(_, c)| c).sum();
            let seen_uni: f64 = followers.iter().map(|(w, _)| p_uni[w]).sum();
            let unseen = 1.0 - seen_uni;
            // With no unseen continuation there is nothing to back off to, so
            // the context keeps its maximum-likelihood estimates.
            let d = if unseen > 1e-12 { discount } else { 0.0 };
            for (w, c) in &followers {
                let p = (*c as f64 - d) / count as f64;
                bi.insert(vec![h.to_string(), w.to_string()], NgramEntry { log10_prob: p.log10(), log10_backoff: None });
            }
            let left = d * followers.len() as f64 / count as f64;
            let alpha = if d > 0.0 { left / unseen } else { 1.0 };
            uni.get_mut(&vec![h.to_string()]).expect("context is in the vocabulary").log10_backoff =
                Some(alpha.log10());
        }
        Ok(ArpaModel { ngrams: vec![uni, bi] })
    }
}

/// Backoff acceptor for `model` over `word_syms`.
///
/// There is one state per context. Word arcs carry `-ln 10 * log10 p`; each
/// non-empty context has an epsilon arc to its suffix weighted by the backoff.
/// Sentence-end probabilities become final weights; a model without a
/// sentence-end token makes every state final with weight 0. Model words that
/// are missing from `word_syms` get no arcs.
pub fn build_lm_fst(model: &ArpaModel, word_syms: &Arc<SymbolTable>) -> Result<WeightedFst> {
    let order = model.order();
    if order == 0 {
        return Err(Error::Contract("language model has no n-grams".into()));
    }
    let has_end = model.get(&[SENTENCE_END.to_string()]).is_some();

    let mut contexts: BTreeSet<Vec<String>> = BTreeSet::new();
    contexts.insert(Vec::new());
    for k in 1..order {
        for words in model.ngrams(k).keys() {
            if words.last().map(String::as_str) != Some(SENTENCE_END) {
                contexts.insert(words.clone());
            }
        }
    }

    let mut fst = WeightedFst::acceptor(word_syms.clone());
    let mut ids: HashMap<&[String], StateId> = HashMap::new();
    for ctx in &contexts {
        let id = if ctx.is_empty() { fst.start() } else { fst.add_state() };
        ids.insert(ctx.as_slice(), id);
    }
    // Longest suffix of `words` (at most order - 1 long) that is a context.
    let target = |words: &[String]| -> StateId {
        let keep = words.len().min(order - 1);
        let mut tail = &words[words.len() - keep..];
        loop {
            if let Some(&id) = ids.get(tail) {
                return id;
            }
            tail = &tail[1..];
        }
    };

    for ctx in &contexts {
        let from = ids[ctx.as_slice()];
        let n = ctx.len() + 1;
        for (words, entry) in model.ngrams(n).range(ctx.clone()..) {
            if words[..ctx.len()] != ctx[..] {
                break;
            }
            let w = &words[ctx.len()];
            let weight = -LN_10 * entry.log10_prob;
            if w == SENTENCE_END {
                fst.set_final(from, weight);
            } else if w == SENTENCE_START {
                continue;
            } else if let Some(label) = word_syms.find(w) {
                fst.add_arc(from, Transition::new(label, label, weight, target(words)));
            }
        }
        if !ctx.is_empty() {
            let backoff = model
                .get(ctx)
                .and_then(|e| e.log10_backoff)
                .map_or(0.0, |b| -LN_10 * b);
            let to = ids[&ctx[1..]];
            fst.add_arc(from, Transition::new(EPSILON, EPSILON, backoff, to));
        }
        if !has_end {
            fst.set_final(from, 0.0);
        }
    }
    if let Some(&s) = ids.get([SENTENCE_START.to_string()].as_slice()) {
        fst.set_start(s);
    }
    fst.arcsort_input();
    Ok(fst.connect())
}
