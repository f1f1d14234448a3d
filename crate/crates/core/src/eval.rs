//! Error chunks and recall at K.
//!
//! An error chunk is a maximal stretch of words outside the longest common
//! subsequence of a gold sentence and a recognized one, paired with what the
//! recognizer produced in its place.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ParallelItem;
use crate::wfst::NBestList;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorChunk {
    /// Index in the gold sentence where `ref_span` starts.
    pub ref_start: usize,
    pub ref_span: Vec<String>,
    /// Index in the hypothesis where `hyp_span` starts.
    pub hyp_start: usize,
    pub hyp_span: Vec<String>,
}

impl ErrorChunk {
    pub fn ref_text(&self) -> String {
        self.ref_span.join(" ")
    }

    pub fn hyp_text(&self) -> String {
        self.hyp_span.join(" ")
    }
}

/// Index pairs of a longest common subsequence of `a` and `b`.
///
/// The walk runs front to back and takes a match as soon as one is optimal;
/// otherwise it skips a word of `a` when that loses nothing, so each anchor
/// pairs with the earliest possible word of `b`.
pub fn lcs_pairs<S: AsRef<str>, T: AsRef<str>>(a: &[S], b: &[T]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    // suffix[i][j] = LCS length of a[i..] and b[j..]
    let mut suffix = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i][j] = if a[i].as_ref() == b[j].as_ref() {
                suffix[i + 1][j + 1] + 1
            } else {
                suffix[i + 1][j].max(suffix[i][j + 1])
            };
        }
    }
    let mut pairs = Vec::with_capacity(suffix[0][0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i].as_ref() == b[j].as_ref() {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if suffix[i + 1][j] >= suffix[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

/// The error chunks between `gold` and `hyp`; empty when they are equal.
pub fn extract_error_chunks<S: AsRef<str>, T: AsRef<str>>(gold: &[S], hyp: &[T]) -> Vec<ErrorChunk> {
    let mut chunks = Vec::new();
    let (mut gi, mut hj) = (0, 0);
    let anchors = lcs_pairs(gold, hyp);
    for (ga, ha) in anchors.into_iter().chain([(gold.len(), hyp.len())]) {
        if ga > gi || ha > hj {
            chunks.push(ErrorChunk {
                ref_start: gi,
                ref_span: gold[gi..ga].iter().map(|w| w.as_ref().to_string()).collect(),
                hyp_start: hj,
                hyp_span: hyp[hj..ha].iter().map(|w| w.as_ref().to_string()).collect(),
            });
        }
        gi = ga + 1;
        hj = ha + 1;
    }
    chunks
}

/// How a predicted chunk must line up with a real one to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChunkMatching {
    /// Same gold span at the same position and the same replacement words.
    /// Because chunks are maximal, the neighbouring words are then correct.
    #[default]
    Anchored,
    /// Same gold words and replacement words anywhere in the sentence.
    Anywhere,
}

fn chunk_matches(real: &ErrorChunk, predicted: &ErrorChunk, matching: ChunkMatching) -> bool {
    let same_words = real.ref_span == predicted.ref_span && real.hyp_span == predicted.hyp_span;
    match matching {
        ChunkMatching::Anchored => same_words && real.ref_start == predicted.ref_start,
        ChunkMatching::Anywhere => same_words,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub id: String,
    pub chunks: usize,
    pub chunks_recalled: usize,
    pub recalled: bool,
    pub error_free: bool,
    pub has_predictions: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub utterances: usize,
    pub utterances_recalled: usize,
    pub error_free: usize,
    pub chunks: usize,
    pub chunks_recalled: usize,
    pub missing_predictions: usize,
}

/// Both recall metrics at one K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Percentage of real error chunks found among the first `k` alternatives.
    pub chunk_recall: f64,
    /// Percentage of utterances whose recognized text is among the first `k`.
    pub utterance_recall: f64,
    pub k: usize,
    pub counts: Counts,
    #[serde(skip)]
    pub per_utterance: Vec<UtteranceScore>,
}

impl MetricsReport {
    /// One row per utterance: id, chunk count, chunks recalled, utterance hit.
    pub fn per_utterance_tsv(&self) -> String {
        let mut out = String::from("id\tchunks\tchunks_recalled\trecalled\terror_free\n");
        for u in &self.per_utterance {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                u.id,
                u.chunks,
                u.chunks_recalled,
                u32::from(u.recalled),
                u32::from(u.error_free)
            );
        }
        out
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn score_utterance(item: &ParallelItem, list: Option<&NBestList>, k: usize, matching: ChunkMatching) -> UtteranceScore {
    let real = extract_error_chunks(&item.gold, &item.hyp);
    let alternatives: Vec<&[String]> = list
        .map(|l| l.entries().iter().take(k).map(|e| e.words.as_slice()).collect())
        .unwrap_or_default();
    let predicted: Vec<Vec<ErrorChunk>> = alternatives
        .iter()
        .map(|alt| extract_error_chunks(&item.gold, alt))
        .collect();
    let chunks_recalled = real
        .iter()
        .filter(|c| predicted.iter().any(|p| p.iter().any(|q| chunk_matches(c, q, matching))))
        .count();
    UtteranceScore {
        id: item.id.clone(),
        chunks: real.len(),
        chunks_recalled,
        recalled: alternatives.contains(&item.hyp.as_slice()),
        error_free: real.is_empty(),
        has_predictions: list.is_some(),
    }
}

/// Scores the first `k` alternatives of each utterance's predictions against
/// its recognized text. Utterances without predictions recall nothing.
pub fn evaluate(
    test: &[ParallelItem],
    predictions: &HashMap<String, NBestList>,
    k: usize,
    matching: ChunkMatching,
) -> MetricsReport {
    let per_utterance: Vec<UtteranceScore> = test
        .par_iter()
        .map(|item| score_utterance(item, predictions.get(&item.id), k, matching))
        .collect();
    let mut counts = Counts {
        utterances: per_utterance.len(),
        ..Counts::default()
    };
    for u in &per_utterance {
        counts.utterances_recalled += usize::from(u.recalled);
        counts.error_free += usize::from(u.error_free);
        counts.chunks += u.chunks;
        counts.chunks_recalled += u.chunks_recalled;
        counts.missing_predictions += usize::from(!u.has_predictions);
    }
    MetricsReport {
        chunk_recall: percent(counts.chunks_recalled, counts.chunks),
        utterance_recall: percent(counts.utterances_recalled, counts.utterances),
        k,
        counts,
        per_utterance,
    }
}

pub fn chunk_recall_at_k(test: &[ParallelItem], predictions: &HashMap<String, NBestList>, k: usize) -> f64 {
    evaluate(test, predictions, k, ChunkMatching::Anchored).chunk_recall
}

pub fn utterance_recall_at_k(test: &[ParallelItem], predictions: &HashMap<String, NBestList>, k: usize) -> f64 {
    evaluate(test, predictions, k, ChunkMatching::Anchored).utterance_recall
}
