use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wfst::{prob_to_weight, Label, SymbolTable, Transition, WeightedFst, EPSILON};

/// Tolerance for a provider distribution to count as normalized.
const STEP_TOLERANCE: f64 = 1e-6;
/// Tolerance for lattice positions built here.
const LATTICE_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_TOP_K: usize = 3;
pub const DEFAULT_TAU: f64 = 10.0;

/// What the per-symbol values of a [`StepDistributions`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    /// Probabilities; each step sums to one.
    #[default]
    Probabilities,
    /// Unnormalized natural-log scores, used as `q` directly.
    LogScores,
}

/// Per-timestep values over phones and EOS for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDistributions {
    steps: Vec<Vec<(String, f64)>>,
    #[serde(default)]
    kind: ScoreKind,
}

impl StepDistributions {
    pub fn new(steps: Vec<Vec<(String, f64)>>) -> Result<Self> {
        Self::with_kind(steps, ScoreKind::Probabilities)
    }

    pub fn from_log_scores(steps: Vec<Vec<(String, f64)>>) -> Result<Self> {
        Self::with_kind(steps, ScoreKind::LogScores)
    }

    pub fn with_kind(steps: Vec<Vec<(String, f64)>>, kind: ScoreKind) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Contract("step distributions need at least one step".into()));
        }
        for (t, step) in steps.iter().enumerate() {
            let mut symbols: Vec<&str> = step.iter().map(|(s, _)| s.as_str()).collect();
            symbols.sort_unstable();
            if symbols.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Contract(format!("step {t} repeats a symbol")));
            }
            match kind {
                ScoreKind::Probabilities => {
                    if step.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
                        return Err(Error::Contract(format!("step {t} has a value outside [0, 1]")));
                    }
                    let total: f64 = step.iter().map(|(_, p)| p).sum();
                    if (total - 1.0).abs() > STEP_TOLERANCE {
                        return Err(Error::Contract(format!("step {t} sums to {total}")));
                    }
                }
                ScoreKind::LogScores => {
                    if !step.iter().any(|(_, q)| q.is_finite()) {
                        return Err(Error::Contract(format!("step {t} has no finite score")));
                    }
                    if step.iter().any(|(_, q)| q.is_nan() || *q == f64::INFINITY) {
                        return Err(Error::Contract(format!("step {t} has an invalid score")));
                    }
                }
            }
        }
        Ok(StepDistributions { steps, kind })
    }

    pub fn steps(&self) -> &[Vec<(String, f64)>] {
        &self.steps
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Natural-log scores of step `t`, dropping symbols with no mass.
    pub fn log_scores(&self, t: usize) -> Vec<(&str, f64)> {
        self.steps[t]
            .iter()
            .map(|(s, v)| {
                let q = match self.kind {
                    ScoreKind::Probabilities => v.ln(),
                    ScoreKind::LogScores => *v,
                };
                (s.as_str(), q)
            })
            .filter(|(_, q)| q.is_finite())
            .collect()
    }

    /// Probabilities of step `t` (a plain softmax for log scores).
    pub fn probabilities(&self, t: usize) -> Vec<(&str, f64)> {
        let scores = self.log_scores(t);
        let q: Vec<f64> = scores.iter().map(|(_, q)| *q).collect();
        let p = softmax(&q, 1.0);
        scores.into_iter().zip(p).map(|((s, _), p)| (s, p)).collect()
    }
}

/// Over which symbols the temperature softmax normalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoftmaxScope {
    /// Only the `top_k` selected symbols; arc probabilities sum to one.
    #[default]
    Selected,
    /// Every symbol of the step; the selected arcs keep their share of that
    /// normalization and sum to less than one.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionOptions {
    pub top_k: usize,
    pub tau: f64,
    pub scope: SoftmaxScope,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            top_k: DEFAULT_TOP_K,
            tau: DEFAULT_TAU,
            scope: SoftmaxScope::Selected,
        }
    }
}

impl DistributionOptions {
    fn check(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Contract("top_k must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Contract(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// `exp(q_i / tau) / sum_j exp(q_j / tau)`, computed with a max shift.
pub fn softmax(q: &[f64], tau: f64) -> Vec<f64> {
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = q.iter().map(|&x| ((x - max) / tau).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// The `top_k` best symbols of step `t` with their temperature-softmax
/// probabilities, best first. Ties are broken by symbol name.
pub fn step_probabilities<'a>(
    dists: &'a StepDistributions,
    t: usize,
    opts: &DistributionOptions,
) -> Result<Vec<(&'a str, f64)>> {
    opts.check()?;
    let mut scores = dists.log_scores(t);
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let keep = opts.top_k.min(scores.len());
    let probs = match opts.scope {
        SoftmaxScope::Selected => {
            let q: Vec<f64> = scores[..keep].iter().map(|(_, q)| *q).collect();
            softmax(&q, opts.tau)
        }
        SoftmaxScope::All => {
            let q: Vec<f64> = scores.iter().map(|(_, q)| *q).collect();
            softmax(&q, opts.tau)[..keep].to_vec()
        }
    };
    Ok(scores[..keep].iter().map(|(s, _)| *s).zip(probs).collect())
}

/// Lattice of parallel arcs between consecutive states, one position per step.
pub fn distributions_to_fst(
    dists: &StepDistributions,
    opts: &DistributionOptions,
    syms: &Arc<SymbolTable>,
) -> Result<WeightedFst> {
    let mut positions = Vec::with_capacity(dists.len());
    for t in 0..dists.len() {
        let step = step_probabilities(dists, t, opts)?;
        positions.push(
            step.into_iter()
                .map(|(s, p)| Ok((vec![syms.label(s)?], p)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let normalized = opts.scope == SoftmaxScope::Selected;
    build_chain(&positions, syms, normalized)
}

/// Output label strings with their probabilities at one lattice position.
pub type LatticePosition = Vec<(Vec<Label>, f64)>;

/// Chains positions into an acyclic acceptor. Each alternative runs from one
/// position state to the next; longer alternatives pass through fresh states
/// with the whole weight on the first arc, and empty ones are epsilon arcs.
///
/// Every position must be a distribution.
pub fn chain_lattice(positions: &[LatticePosition], syms: &Arc<SymbolTable>) -> Result<WeightedFst> {
    build_chain(positions, syms, true)
}

fn build_chain(positions: &[LatticePosition], syms: &Arc<SymbolTable>, normalized: bool) -> Result<WeightedFst> {
    let mut fst = WeightedFst::acceptor(syms.clone());
    let mut here = fst.start();
    for (t, position) in positions.iter().enumerate() {
        let total: f64 = position.iter().map(|(_, p)| p).sum();
        if normalized && (total - 1.0).abs() > LATTICE_TOLERANCE {
            return Err(Error::Contract(format!("lattice position {t} sums to {total}")));
        }
        let next = fst.add_state();
        for (labels, p) in position {
            if *p <= 0.0 {
                continue;
            }
            let weight = prob_to_weight(*p);
            match labels.as_slice() {
                [] => fst.add_arc(here, Transition::new(EPSILON, EPSILON, weight, next)),
                [first, rest @ ..] => {
                    let mut state = here;
                    let mut label = *first;
                    let mut w = weight;
                    for k in 0..=rest.len() {
                        let to = if k == rest.len() { next } else { fst.add_state() };
                        fst.add_arc(state, Transition::new(label, label, w, to));
                        if k < rest.len() {
                            label = rest[k];
                        }
                        state = to;
                        w = 0.0;
                    }
                }
            }
        }
        here = next;
    }
    fst.set_final(here, 0.0);
    fst.arcsort_input();
    Ok(fst)
}
