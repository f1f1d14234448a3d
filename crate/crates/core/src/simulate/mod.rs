//! Turning clean word sequences into ranked lists of errorful alternatives.

mod decoder;
mod lattice;
mod merge;
mod provider;
mod sampling;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wfst::{NBestEntry, NBestList, Ranking};

pub use decoder::{
    utterance_rng, DecoderOptions, Seq2SeqMode, Seq2SeqOptions, Simulator, ATTEMPTS_PER_ALTERNATIVE,
    SEQ2SEQ_DRAWS, SEQ2SEQ_NBEST,
};
pub use lattice::{
    chain_lattice, distributions_to_fst, softmax, step_probabilities, DistributionOptions, LatticePosition,
    ScoreKind, SoftmaxScope, StepDistributions, DEFAULT_TAU, DEFAULT_TOP_K,
};
pub use merge::merge_kbest;
pub use provider::{DistributionProvider, FileProvider, ProviderRequest};
pub use sampling::{
    rank_reweight, sample_alternatives, sample_cues, sample_ranked, sample_without_replacement, Draw,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAlternative {
    pub text: String,
    /// One-based position in the list.
    pub rank: usize,
    pub score: f64,
    pub freq: u32,
}

/// One line of simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub id: String,
    pub alternatives: Vec<RankedAlternative>,
}

impl SimulationRecord {
    pub fn from_list(id: impl Into<String>, list: &NBestList) -> Self {
        SimulationRecord {
            id: id.into(),
            alternatives: list
                .entries()
                .iter()
                .enumerate()
                .map(|(i, e)| RankedAlternative {
                    text: e.text(),
                    rank: i + 1,
                    score: e.score,
                    freq: e.freq,
                })
                .collect(),
        }
    }

    /// The alternatives as a list in rank order.
    pub fn to_list(&self) -> Result<NBestList> {
        let mut alts: Vec<&RankedAlternative> = self.alternatives.iter().collect();
        alts.sort_by_key(|a| a.rank);
        let entries = alts
            .into_iter()
            .map(|a| NBestEntry {
                words: a.text.split_whitespace().map(String::from).collect(),
                score: a.score,
                freq: a.freq,
            })
            .collect();
        NBestList::new(entries, Ranking::Merged)
    }
}

pub fn write_records(records: &[SimulationRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_records(text: &str, source: &str) -> Result<Vec<SimulationRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(source, i + 1, e.to_string())))
        .collect()
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<SimulationRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text, &path.display().to_string())
}
