//! Run configuration: defaults, then an optional TOML file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use errsim_core::align::DEFAULT_INDEL_COST;
use errsim_core::confmat::DEFAULT_BETA;
use errsim_core::corpus::PronunciationPolicy;
use errsim_core::eval::ChunkMatching;
use errsim_core::simulate::{ScoreKind, SoftmaxScope, DEFAULT_TAU, DEFAULT_TOP_K};
use errsim_core::wfst::{PronunciationWeighting, DEFAULT_EOS_COST, DEFAULT_HYPOTHESIS_CAP};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Matching {
    #[default]
    Anchored,
    Anywhere,
}

impl From<Matching> for ChunkMatching {
    fn from(m: Matching) -> Self {
        match m {
            Matching::Anchored => ChunkMatching::Anchored,
            Matching::Anywhere => ChunkMatching::Anywhere,
        }
    }
}

/// Which pronunciation a word contributes to the clean phone sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pronunciation {
    #[default]
    First,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Uniform,
    InverseCount,
}

impl From<Weighting> for PronunciationWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Uniform => PronunciationWeighting::Uniform,
            Weighting::InverseCount => PronunciationWeighting::InverseCount,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scores {
    #[default]
    Probabilities,
    LogScores,
}

impl From<Scores> for ScoreKind {
    fn from(s: Scores) -> Self {
        match s {
            Scores::Probabilities => ScoreKind::Probabilities,
            Scores::LogScores => ScoreKind::LogScores,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    #[default]
    Selected,
    All,
}

impl From<Scope> for SoftmaxScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Selected => SoftmaxScope::Selected,
            Scope::All => SoftmaxScope::All,
        }
    }
}

/// Everything a run depends on. Echoed to stderr before any work starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Alternatives kept per utterance, and the K of recall@K.
    pub k: usize,
    /// Lattices drawn per utterance in sampled mode.
    pub iterations: usize,
    pub tau: f64,
    pub beta: f64,
    pub top_k: usize,
    pub eos_cost: f64,
    pub indel_cost: f64,
    /// Pseudo-count for confusion-matrix estimation.
    pub add_k: f64,
    pub hypothesis_cap: usize,
    pub matching: Matching,
    pub pronunciation: Pronunciation,
    pub weighting: Weighting,
    pub scores: Scores,
    pub softmax_scope: Scope,
    pub threads: Option<usize>,
    pub inventory: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub lm: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub distributions: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            k: 100,
            iterations: 1000,
            tau: DEFAULT_TAU,
            beta: DEFAULT_BETA,
            top_k: DEFAULT_TOP_K,
            eos_cost: DEFAULT_EOS_COST,
            indel_cost: DEFAULT_INDEL_COST,
            add_k: 0.0,
            hypothesis_cap: DEFAULT_HYPOTHESIS_CAP,
            matching: Matching::Anchored,
            pronunciation: Pronunciation::First,
            weighting: Weighting::Uniform,
            scores: Scores::Probabilities,
            softmax_scope: Scope::Selected,
            threads: None,
            inventory: None,
            lexicon: None,
            lm: None,
            corpus: None,
            matrix: None,
            distributions: None,
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with any RunConfig fields; paths in it are relative to the file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    #[arg(long, global = true)]
    pub eos_cost: Option<f64>,
    #[arg(long, global = true)]
    pub indel_cost: Option<f64>,
    #[arg(long, global = true)]
    pub add_k: Option<f64>,
    #[arg(long, global = true)]
    pub hypothesis_cap: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub matching: Option<Matching>,
    #[arg(long, global = true, value_enum)]
    pub pronunciation: Option<Pronunciation>,
    #[arg(long, global = true, value_enum)]
    pub weighting: Option<Weighting>,
    #[arg(long, global = true, value_enum)]
    pub scores: Option<Scores>,
    #[arg(long, global = true, value_enum)]
    pub softmax_scope: Option<Scope>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Phone inventory with features; the built-in ARPAbet set when absent.
    #[arg(long, global = true, value_name = "FILE")]
    pub inventory: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// ARPA language model.
    #[arg(long, global = true, value_name = "FILE")]
    pub lm: Option<PathBuf>,
    /// `id<TAB>gold<TAB>recognized` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Confusion matrix written by train-confmat.
    #[arg(long, global = true, value_name = "FILE")]
    pub matrix: Option<PathBuf>,
    /// JSON-lines step distributions for the sequence-model modes.
    #[arg(long, global = true, value_name = "FILE")]
    pub distributions: Option<PathBuf>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => load_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { config.$field = v; })*
            };
        }
        set!(seed, k, iterations, tau, beta, top_k, eos_cost, indel_cost, add_k, hypothesis_cap);
        set!(matching, pronunciation, weighting, scores, softmax_scope);
        macro_rules! set_opt {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { config.$field = self.$field.clone(); })*
            };
        }
        set_opt!(threads, inventory, lexicon, lm, corpus, matrix, distributions);
        config.validate()?;
        Ok(config)
    }
}

fn load_file(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut config: RunConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {}", path.display(), e.message())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [
        &mut config.inventory,
        &mut config.lexicon,
        &mut config.lm,
        &mut config.corpus,
        &mut config.matrix,
        &mut config.distributions,
    ]
    .into_iter()
    .flatten()
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        if !(self.eos_cost >= 0.0 && self.eos_cost.is_finite()) {
            return bad(format!("eos_cost must be >= 0, got {}", self.eos_cost));
        }
        if !(self.indel_cost > 0.0 && self.indel_cost.is_finite()) {
            return bad(format!("indel_cost must be positive, got {}", self.indel_cost));
        }
        if !(self.add_k >= 0.0 && self.add_k.is_finite()) {
            return bad(format!("add_k must be >= 0, got {}", self.add_k));
        }
        if self.hypothesis_cap == 0 {
            return bad("hypothesis_cap must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn policy(&self) -> PronunciationPolicy {
        match self.pronunciation {
            Pronunciation::First => PronunciationPolicy::First,
            Pronunciation::Sample => PronunciationPolicy::Sample { seed: self.seed },
        }
    }

    /// A required input path, or a usage error naming the flag.
    pub fn need<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
        path.as_deref()
            .ok_or_else(|| CliError::Usage(format!("--{flag} is required (flag or config file)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.k, c.tau, c.beta, c.top_k), (100, 10.0, 0.8, 3));
        assert_eq!((c.eos_cost, c.indel_cost), (0.1, 0.7));
        c.validate().unwrap();
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 5\nk = 20\nlexicon = \"lex.txt\"\nmatching = \"anywhere\"\n").unwrap();
        let args = ConfigArgs {
            config: Some(path),
            k: Some(7),
            ..ConfigArgs::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!((c.seed, c.k, c.matching), (5, 7, Matching::Anywhere));
        assert_eq!(c.lexicon.unwrap(), dir.path().join("lex.txt"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "temperature = 3\n").unwrap();
        let args = ConfigArgs { config: Some(path), ..ConfigArgs::default() };
        assert!(matches!(args.resolve(), Err(CliError::Usage(_))));
    }

    #[test]
    fn out_of_range_is_usage() {
        for args in [
            ConfigArgs { beta: Some(1.5), ..ConfigArgs::default() },
            ConfigArgs { tau: Some(0.0), ..ConfigArgs::default() },
            ConfigArgs { k: Some(0), ..ConfigArgs::default() },
        ] {
            assert!(matches!(args.resolve(), Err(CliError::Usage(_))));
        }
    }
}
