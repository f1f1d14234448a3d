//! Phonetic confusion matrix estimation and its derived views.
//!
//! A row maps one input phone to a distribution over output phone strings of
//! length 0 (deletion), 1 (identity or mutation) or more (insertion). Rows
//! are kept sorted by descending probability with lexicographic tie-breaks,
//! which fixes both the sampling rank order and the serialized layout.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::Alignment;
use crate::corpus::{phones_to_string, Phone, PhoneInventory};
use crate::error::{Error, Result};

pub const DEFAULT_BETA: f64 = 0.8;
const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub output: Vec<Phone>,
    pub count: u64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRow {
    alternatives: Vec<Alternative>,
}

impl ConfusionRow {
    fn new(mut alternatives: Vec<Alternative>) -> Self {
        alternatives.sort_by(|a, b| {
            b.prob
                .total_cmp(&a.prob)
                .then_with(|| a.output.cmp(&b.output))
        });
        ConfusionRow { alternatives }
    }

    pub fn identity(phone: &Phone) -> Self {
        ConfusionRow {
            alternatives: vec![Alternative {
                output: vec![phone.clone()],
                count: 0,
                prob: 1.0,
            }],
        }
    }

    /// Alternatives, most probable first.
    pub fn alternatives(&self) -> &[Alternative] {
        &self.alternatives
    }

    pub fn len(&self) -> usize {
        self.alternatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alternatives.is_empty()
    }

    pub fn total_prob(&self) -> f64 {
        self.alternatives.iter().map(|a| a.prob).sum()
    }
}

/// Per-phone distribution over output phone strings, with raw counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    rows: BTreeMap<Phone, ConfusionRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationOptions {
    /// Pseudo-count added to every observed alternative and to the identity
    /// alternative of each row. Zero gives raw relative frequencies.
    pub add_k: f64,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        EstimationOptions { add_k: 0.0 }
    }
}

type Counts = HashMap<Phone, HashMap<Vec<Phone>, u64>>;

fn count_pairs(alignments: &[Alignment]) -> Counts {
    alignments
        .par_iter()
        .fold(Counts::new, |mut acc, alignment| {
            for pair in &alignment.pairs {
                *acc.entry(pair.input.clone())
                    .or_default()
                    .entry(pair.output.clone())
                    .or_default() += 1;
            }
            acc
        })
        .reduce(Counts::new, |mut a, b| {
            for (phone, row) in b {
                let into = a.entry(phone).or_default();
                for (out, n) in row {
                    *into.entry(out).or_default() += n;
                }
            }
            a
        })
}

impl ConfusionMatrix {
    /// Identity rows for every inventory phone.
    pub fn identity(inventory: &PhoneInventory) -> Self {
        ConfusionMatrix {
            rows: inventory
                .phones()
                .iter()
                .map(|p| (p.clone(), ConfusionRow::identity(p)))
                .collect(),
        }
    }

    pub fn estimate(
        alignments: &[Alignment],
        inventory: &PhoneInventory,
        options: EstimationOptions,
    ) -> Result<Self> {
        if alignments.is_empty() {
            return Err(Error::Contract("no alignments to estimate from".into()));
        }
        if !(options.add_k >= 0.0 && options.add_k.is_finite()) {
            return Err(Error::Contract(format!("add_k must be >= 0, got {}", options.add_k)));
        }
        let counts = count_pairs(alignments);
        let mut rows = BTreeMap::new();
        for phone in inventory.phones() {
            let row = match counts.get(phone) {
                None => ConfusionRow::identity(phone),
                Some(observed) => {
                    let mut entries: Vec<(Vec<Phone>, u64)> =
                        observed.iter().map(|(o, &n)| (o.clone(), n)).collect();
                    let identity = vec![phone.clone()];
                    if options.add_k > 0.0 && !observed.contains_key(&identity) {
                        entries.push((identity, 0));
                    }
                    let total: f64 = entries.iter().map(|(_, n)| *n as f64 + options.add_k).sum();
                    ConfusionRow::new(
                        entries
                            .into_iter()
                            .map(|(output, count)| Alternative {
                                prob: (count as f64 + options.add_k) / total,
                                output,
                                count,
                            })
                            .collect(),
                    )
                }
            };
            rows.insert(phone.clone(), row);
        }
        for phone in counts.keys() {
            inventory.check(phone)?;
        }
        Ok(ConfusionMatrix { rows })
    }

    /// Builds a matrix straight from probabilities (counts recorded as 0).
    pub fn from_probabilities<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Phone, Vec<(Vec<Phone>, f64)>)>,
    {
        let mut out = BTreeMap::new();
        for (phone, alts) in rows {
            let row = ConfusionRow::new(
                alts.into_iter()
                    .map(|(output, prob)| Alternative {
                        output,
                        count: 0,
                        prob,
                    })
                    .collect(),
            );
            validate_row(&phone, &row)?;
            out.insert(phone, row);
        }
        Ok(ConfusionMatrix { rows: out })
    }

    pub fn row(&self, phone: &Phone) -> Option<&ConfusionRow> {
        self.rows.get(phone)
    }

    /// The phone's row, or an identity row when the matrix has none.
    pub fn row_or_identity(&self, phone: &Phone) -> Cow<'_, ConfusionRow> {
        match self.rows.get(phone) {
            Some(r) => Cow::Borrowed(r),
            None => Cow::Owned(ConfusionRow::identity(phone)),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Phone, &ConfusionRow)> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Length-1 alternatives of the phone's row, renormalized. Empty when
    /// the row has none.
    pub fn c11_row(&self, phone: &Phone) -> Vec<(Phone, f64)> {
        let row = self.row_or_identity(phone);
        let singles: Vec<(Phone, f64)> = row
            .alternatives()
            .iter()
            .filter(|a| a.output.len() == 1)
            .map(|a| (a.output[0].clone(), a.prob))
            .collect();
        let total: f64 = singles.iter().map(|(_, p)| p).sum();
        singles.into_iter().map(|(p, m)| (p, m / total)).collect()
    }

    /// `input<TAB>outputs<TAB>count<TAB>prob` per alternative; `-` marks
    /// an empty output.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (phone, row) in &self.rows {
            for alt in &row.alternatives {
                let output = if alt.output.is_empty() {
                    "-".to_string()
                } else {
                    phones_to_string(&alt.output)
                };
                out.push_str(&format!("{phone}\t{output}\t{}\t{}\n", alt.count, alt.prob));
            }
        }
        out
    }

    pub fn parse(text: &str, source: &str, inventory: &PhoneInventory) -> Result<Self> {
        let mut grouped: BTreeMap<Phone, Vec<Alternative>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(source, lineno + 1, "expected 4 tab-separated fields"));
            }
            let input = inventory.get(fields[0].trim())?.clone();
            let output = if fields[1].trim() == "-" {
                Vec::new()
            } else {
                fields[1]
                    .split_whitespace()
                    .map(|s| inventory.get(s).cloned())
                    .collect::<Result<Vec<_>>>()?
            };
            let count = fields[2]
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::parse(source, lineno + 1, format!("bad count: {e}")))?;
            let prob = fields[3]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(source, lineno + 1, format!("bad probability: {e}")))?;
            grouped.entry(input).or_default().push(Alternative {
                output,
                count,
                prob,
            });
        }
        let mut rows = BTreeMap::new();
        for (phone, alts) in grouped {
            let row = ConfusionRow::new(alts);
            validate_row(&phone, &row).map_err(|e| Error::parse(source, 0, e.to_string()))?;
            rows.insert(phone, row);
        }
        Ok(ConfusionMatrix { rows })
    }

    pub fn load(path: impl AsRef<Path>, inventory: &PhoneInventory) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), inventory)
    }
}

fn validate_row(phone: &Phone, row: &ConfusionRow) -> Result<()> {
    if row.is_empty() {
        return Err(Error::Contract(format!("row {phone} has no alternatives")));
    }
    if row.alternatives.iter().any(|a| a.prob.is_nan() || a.prob <= 0.0) {
        return Err(Error::Contract(format!("row {phone} has a non-positive probability")));
    }
    let total = row.total_prob();
    if (total - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::Contract(format!("row {phone} sums to {total}")));
    }
    Ok(())
}

pub fn estimate_confusion_matrix(
    alignments: &[Alignment],
    inventory: &PhoneInventory,
) -> Result<ConfusionMatrix> {
    ConfusionMatrix::estimate(alignments, inventory, EstimationOptions::default())
}

/// The five error kinds a single input phone can exhibit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cue {
    NoError,
    Mutation,
    Deletion,
    #[serde(rename = "insert-1")]
    InsertOne,
    InsertMany,
}

impl Cue {
    pub const ALL: [Cue; 5] = [
        Cue::NoError,
        Cue::Mutation,
        Cue::Deletion,
        Cue::InsertOne,
        Cue::InsertMany,
    ];

    pub fn classify(input: &Phone, output: &[Phone]) -> Cue {
        match output.len() {
            0 => Cue::Deletion,
            1 if output[0] == *input => Cue::NoError,
            1 => Cue::Mutation,
            2 => Cue::InsertOne,
            _ => Cue::InsertMany,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Cue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cue::NoError => "no-error",
            Cue::Mutation => "mutation",
            Cue::Deletion => "deletion",
            Cue::InsertOne => "insert-1",
            Cue::InsertMany => "insert-many",
        })
    }
}

/// Per-phone distribution over the five [`Cue`] kinds. Zero-mass cues are
/// kept as explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollapsedErrorMatrix {
    rows: BTreeMap<Phone, [f64; 5]>,
}

impl CollapsedErrorMatrix {
    pub fn row(&self, phone: &Phone) -> Option<&[f64; 5]> {
        self.rows.get(phone)
    }

    pub fn row_or_identity(&self, phone: &Phone) -> [f64; 5] {
        self.rows.get(phone).copied().unwrap_or([1.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Phone, &[f64; 5])> {
        self.rows.iter()
    }

    pub fn insert(&mut self, phone: Phone, row: [f64; 5]) {
        self.rows.insert(phone, row);
    }
}

pub fn collapse_error_types(cm: &ConfusionMatrix) -> CollapsedErrorMatrix {
    let rows = cm
        .rows()
        .map(|(phone, row)| {
            let mut buckets = [0.0; 5];
            for alt in row.alternatives() {
                buckets[Cue::classify(phone, &alt.output).index()] += alt.prob;
            }
            (phone.clone(), buckets)
        })
        .collect();
    CollapsedErrorMatrix { rows }
}

/// A distribution over phones for one output timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedTarget {
    pub probs: BTreeMap<Phone, f64>,
}

impl SmoothedTarget {
    pub fn get(&self, phone: &Phone) -> f64 {
        self.probs.get(phone).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// `beta * onehot(y) + (1 - beta) * C11[y]`, falling back to the one-hot
/// target when `y` has no length-1 alternatives.
pub fn smooth_targets(y: &Phone, cm: &ConfusionMatrix, beta: f64) -> Result<SmoothedTarget> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Contract(format!("beta must lie in [0, 1], got {beta}")));
    }
    let c11 = cm.c11_row(y);
    let mut probs = BTreeMap::new();
    probs.insert(y.clone(), 1.0);
    if c11.is_empty() {
        return Ok(SmoothedTarget { probs });
    }
    probs.insert(y.clone(), beta);
    for (phone, p) in c11 {
        *probs.entry(phone).or_insert(0.0) += (1.0 - beta) * p;
    }
    Ok(SmoothedTarget { probs })
}

/// One cue per aligned input phone.
pub fn cue_labels(alignment: &Alignment) -> Vec<Cue> {
    alignment
        .pairs
        .iter()
        .map(|p| Cue::classify(&p.input, &p.output))
        .collect()
}
