//! Phonetic-distance edit alignment of reference and hypothesis phone
//! strings, grouped so every reference phone owns the hypothesis phones it
//! produced.

use serde::{Deserialize, Serialize};

use crate::corpus::{Phone, PhoneInventory};
use crate::error::{Error, Result};

pub const DEFAULT_INDEL_COST: f64 = 0.7;

/// Normalized Hamming distance between two phones' feature vectors.
pub fn phone_distance(inventory: &PhoneInventory, a: &Phone, b: &Phone) -> Result<f64> {
    let fa = inventory.features(a)?;
    let fb = inventory.features(b)?;
    let differing = fa.iter().zip(fb).filter(|(x, y)| x != y).count();
    Ok(differing as f64 / fa.len() as f64)
}

/// One reference phone and the (possibly empty) hypothesis phones aligned to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub input: Phone,
    pub output: Vec<Phone>,
}

impl AlignedPair {
    pub fn new(input: Phone, output: Vec<Phone>) -> Self {
        AlignedPair { input, output }
    }

    pub fn is_identity(&self) -> bool {
        self.output.len() == 1 && self.output[0] == self.input
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
    pub cost: f64,
}

impl Alignment {
    pub fn reference(&self) -> Vec<Phone> {
        self.pairs.iter().map(|p| p.input.clone()).collect()
    }

    pub fn hypothesis(&self) -> Vec<Phone> {
        self.pairs.iter().flat_map(|p| p.output.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EditOp {
    Sub(usize, usize),
    Del(usize),
    Ins(usize),
}

/// Minimum-cost aligner. Substitutions cost [`phone_distance`]; insertions
/// and deletions cost a fixed `indel_cost`.
#[derive(Debug, Clone, Copy)]
pub struct PhoneAligner<'a> {
    inventory: &'a PhoneInventory,
    indel_cost: f64,
}

impl<'a> PhoneAligner<'a> {
    pub fn new(inventory: &'a PhoneInventory) -> Self {
        Self::with_indel_cost(inventory, DEFAULT_INDEL_COST)
    }

    pub fn with_indel_cost(inventory: &'a PhoneInventory, indel_cost: f64) -> Self {
        PhoneAligner {
            inventory,
            indel_cost,
        }
    }

    pub fn indel_cost(&self) -> f64 {
        self.indel_cost
    }

    pub fn align(&self, reference: &[Phone], hypothesis: &[Phone]) -> Result<Alignment> {
        if reference.is_empty() {
            return Err(Error::Contract("cannot align an empty reference".into()));
        }
        let (n, m) = (reference.len(), hypothesis.len());
        let mut sub = vec![0.0; n * m];
        for (i, r) in reference.iter().enumerate() {
            for (j, h) in hypothesis.iter().enumerate() {
                sub[i * m + j] = phone_distance(self.inventory, r, h)?;
            }
        }
        let width = m + 1;
        let mut cost = vec![0.0f64; (n + 1) * width];
        for i in 1..=n {
            cost[i * width] = cost[(i - 1) * width] + self.indel_cost;
        }
        for j in 1..=m {
            cost[j] = cost[j - 1] + self.indel_cost;
        }
        for i in 1..=n {
            for j in 1..=m {
                let diag = cost[(i - 1) * width + j - 1] + sub[(i - 1) * m + j - 1];
                let up = cost[(i - 1) * width + j] + self.indel_cost;
                let left = cost[i * width + j - 1] + self.indel_cost;
                cost[i * width + j] = diag.min(up).min(left);
            }
        }

        // Backtrace; on ties prefer substitution, then deletion, then insertion.
        let mut ops = Vec::with_capacity(n + m);
        let (mut i, mut j) = (n, m);
        while i > 0 || j > 0 {
            let here = cost[i * width + j];
            if i > 0 && j > 0 && cost[(i - 1) * width + j - 1] + sub[(i - 1) * m + j - 1] == here {
                ops.push(EditOp::Sub(i - 1, j - 1));
                i -= 1;
                j -= 1;
            } else if i > 0 && cost[(i - 1) * width + j] + self.indel_cost == here {
                ops.push(EditOp::Del(i - 1));
                i -= 1;
            } else {
                ops.push(EditOp::Ins(j - 1));
                j -= 1;
            }
        }
        ops.reverse();

        Ok(Alignment {
            pairs: group_edit_script(&ops, reference, hypothesis),
            cost: cost[n * width + m],
        })
    }
}

/// Attaches each inserted phone to the closest preceding reference phone;
/// insertions before the first reference phone go to that first phone.
fn group_edit_script(ops: &[EditOp], reference: &[Phone], hypothesis: &[Phone]) -> Vec<AlignedPair> {
    let mut pairs: Vec<AlignedPair> = Vec::with_capacity(reference.len());
    let mut leading = Vec::new();
    for op in ops {
        match *op {
            EditOp::Sub(i, j) => {
                pairs.push(AlignedPair::new(reference[i].clone(), vec![hypothesis[j].clone()]))
            }
            EditOp::Del(i) => pairs.push(AlignedPair::new(reference[i].clone(), Vec::new())),
            EditOp::Ins(j) => match pairs.last_mut() {
                Some(last) => last.output.push(hypothesis[j].clone()),
                None => leading.push(hypothesis[j].clone()),
            },
        }
    }
    if !leading.is_empty() {
        let first = &mut pairs[0].output;
        leading.append(first);
        *first = leading;
    }
    pairs
}

pub fn align_phones(
    inventory: &PhoneInventory,
    reference: &[Phone],
    hypothesis: &[Phone],
) -> Result<Alignment> {
    PhoneAligner::new(inventory).align(reference, hypothesis)
}

fn render_output(output: &[Phone]) -> String {
    if output.is_empty() {
        "-".to_string()
    } else {
        crate::corpus::phones_to_string(output)
    }
}

/// `input<TAB>outputs` per pair, blank line between utterances.
pub fn alignment_dump<'a>(alignments: impl IntoIterator<Item = &'a Alignment>) -> String {
    let mut out = String::new();
    for (k, alignment) in alignments.into_iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for pair in &alignment.pairs {
            out.push_str(&format!("{}\t{}\n", pair.input, render_output(&pair.output)));
        }
    }
    out
}
