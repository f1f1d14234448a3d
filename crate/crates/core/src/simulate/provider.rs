use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lattice::{ScoreKind, StepDistributions};
use crate::confmat::Cue;
use crate::corpus::Phone;
use crate::error::{Error, Result};

/// What the decoder asks of a sequence model on each attempt.
#[derive(Debug, Clone, Copy)]
pub struct ProviderRequest<'a> {
    pub utterance_id: &'a str,
    pub phones: &'a [Phone],
    pub cues: &'a [Cue],
    /// Zero-based attempt counter for this utterance.
    pub attempt: usize,
}

/// Source of per-step output distributions for a (phones, cues) input.
///
/// Implementations must be deterministic in the request so that decoding is
/// reproducible.
pub trait DistributionProvider: Sync {
    fn distributions(&self, request: &ProviderRequest<'_>) -> std::result::Result<StepDistributions, String>;
}

#[derive(Debug, Deserialize, Serialize)]
struct Record {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cues: Option<Vec<Cue>>,
    steps: Vec<Vec<(String, f64)>>,
}

type CuedRecord = (Option<Vec<Cue>>, StepDistributions);

/// Distributions precomputed offline, one JSON object per line:
/// `{"id": ..., "steps": [[[symbol, prob], ...], ...]}` with an optional
/// `"cues"` list.
///
/// An utterance may have several records. A request draws from the records
/// whose cues equal its own, falling back to records without cues and then to
/// every record of the utterance, and picks record `attempt % count`.
#[derive(Debug, Clone, Default)]
pub struct FileProvider {
    records: HashMap<String, Vec<CuedRecord>>,
}

impl FileProvider {
    pub fn parse(text: &str, source: &str, kind: ScoreKind) -> Result<Self> {
        let mut records: HashMap<String, Vec<_>> = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record =
                serde_json::from_str(line).map_err(|e| Error::parse(source, idx + 1, e.to_string()))?;
            let dists = StepDistributions::with_kind(record.steps, kind)
                .map_err(|e| Error::parse(source, idx + 1, e.to_string()))?;
            records.entry(record.id).or_default().push((record.cues, dists));
        }
        Ok(FileProvider { records })
    }

    pub fn load(path: impl AsRef<Path>, kind: ScoreKind) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), kind)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl DistributionProvider for FileProvider {
    fn distributions(&self, request: &ProviderRequest<'_>) -> std::result::Result<StepDistributions, String> {
        let all = self
            .records
            .get(request.utterance_id)
            .ok_or_else(|| format!("no distributions for utterance {:?}", request.utterance_id))?;
        let matching: Vec<&StepDistributions> = all
            .iter()
            .filter(|(cues, _)| cues.as_deref() == Some(request.cues))
            .map(|(_, d)| d)
            .collect();
        let generic: Vec<&StepDistributions> = all.iter().filter(|(c, _)| c.is_none()).map(|(_, d)| d).collect();
        let pool = if !matching.is_empty() {
            matching
        } else if !generic.is_empty() {
            generic
        } else {
            all.iter().map(|(_, d)| d).collect()
        };
        Ok(pool[request.attempt % pool.len()].clone())
    }
}
