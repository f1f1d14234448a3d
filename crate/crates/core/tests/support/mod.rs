//! Oracles and toy fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use errsim_core::align::phone_distance;
use errsim_core::confmat::ConfusionMatrix;
use errsim_core::corpus::{phones, Lexicon, Phone, PhoneInventory, EOS_SYMBOL};
use errsim_core::simulate::{DistributionProvider, ProviderRequest, StepDistributions};
use errsim_core::wfst::{ArpaModel, Label, SymbolTable, Transition, WeightedFst, EPSILON};
use rand::Rng;

/// Five phones at assorted feature distances from one another.
pub fn five_phone_inventory() -> PhoneInventory {
    let bits = |s: &str| s.chars().map(|c| c == '1').collect::<Vec<bool>>();
    PhoneInventory::from_features([
        ("a", bits("000000")),
        ("b", bits("100000")),
        ("c", bits("110000")),
        ("d", bits("111100")),
        ("e", bits("111111")),
    ])
    .unwrap()
}

/// Minimal alignment cost by trying every edit at every step.
pub fn brute_force_alignment_cost(inv: &PhoneInventory, r: &[Phone], h: &[Phone], indel: f64) -> f64 {
    match (r.split_first(), h.split_first()) {
        (None, _) => indel * h.len() as f64,
        (_, None) => indel * r.len() as f64,
        (Some((a, rr)), Some((b, hh))) => {
            let sub = phone_distance(inv, a, b).unwrap() + brute_force_alignment_cost(inv, rr, hh, indel);
            let del = indel + brute_force_alignment_cost(inv, rr, h, indel);
            let ins = indel + brute_force_alignment_cost(inv, r, hh, indel);
            sub.min(del).min(ins)
        }
    }
}

/// Every sequence over `alphabet` with length in `lengths`.
pub fn all_sequences(alphabet: &[Phone], lengths: std::ops::RangeInclusive<usize>) -> Vec<Vec<Phone>> {
    let mut out = Vec::new();
    for len in lengths {
        let mut idx = vec![0usize; len];
        loop {
            out.push(idx.iter().map(|&i| alphabet[i].clone()).collect());
            let mut pos = 0;
            while pos < len {
                idx[pos] += 1;
                if idx[pos] < alphabet.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == len {
                break;
            }
        }
    }
    out
}

pub fn letter_syms() -> Arc<SymbolTable> {
    Arc::new(SymbolTable::from_symbols(["a", "b", "c", "d"]))
}

/// A random machine whose arcs only go from lower to higher states, so every
/// path is finite. Labels include epsilon on either side.
pub fn random_acyclic_fst<R: Rng>(
    rng: &mut R,
    isyms: &Arc<SymbolTable>,
    osyms: &Arc<SymbolTable>,
    max_states: usize,
    max_arcs_per_state: usize,
) -> WeightedFst {
    let mut fst = WeightedFst::new(isyms.clone(), osyms.clone());
    let n = rng.gen_range(2..=max_states);
    for _ in 1..n {
        fst.add_state();
    }
    let label = |rng: &mut R, syms: &Arc<SymbolTable>| -> Label {
        if rng.gen_bool(0.2) {
            EPSILON
        } else {
            rng.gen_range(1..syms.len() as Label)
        }
    };
    for s in 0..n - 1 {
        for _ in 0..rng.gen_range(1..=max_arcs_per_state) {
            let next = rng.gen_range(s + 1..n) as u32;
            let (i, o) = (label(rng, isyms), label(rng, osyms));
            fst.add_arc(s as u32, Transition::new(i, o, (rng.gen_range(0..40) as f64) * 0.25, next));
        }
    }
    fst.set_final((n - 1) as u32, 0.0);
    for s in 0..n - 1 {
        if rng.gen_bool(0.3) {
            fst.set_final(s as u32, rng.gen_range(0..8) as f64 * 0.5);
        }
    }
    fst
}

/// Number of accepting paths of an acyclic machine whose arcs go forward.
pub fn count_paths(fst: &WeightedFst) -> u64 {
    let n = fst.num_states();
    let mut ways = vec![0u64; n];
    ways[fst.start() as usize] = 1;
    let mut total = 0;
    for s in 0..n {
        if fst.is_final(s as u32) {
            total += ways[s];
        }
        for arc in fst.arcs(s as u32) {
            ways[arc.nextstate as usize] += ways[s];
        }
    }
    total
}

/// Every accepting path as (input labels, output labels, weight), epsilons
/// removed. Only for acyclic machines.
pub fn enumerate_paths(fst: &WeightedFst) -> Vec<(Vec<Label>, Vec<Label>, f64)> {
    fn walk(
        fst: &WeightedFst,
        s: u32,
        ins: &mut Vec<Label>,
        outs: &mut Vec<Label>,
        w: f64,
        out: &mut Vec<(Vec<Label>, Vec<Label>, f64)>,
    ) {
        if let Some(f) = fst.final_weight(s) {
            out.push((ins.clone(), outs.clone(), w + f));
        }
        for arc in fst.arcs(s) {
            let (pi, po) = (arc.ilabel != EPSILON, arc.olabel != EPSILON);
            if pi {
                ins.push(arc.ilabel);
            }
            if po {
                outs.push(arc.olabel);
            }
            walk(fst, arc.nextstate, ins, outs, w + arc.weight, out);
            if pi {
                ins.pop();
            }
            if po {
                outs.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(fst, fst.start(), &mut Vec::new(), &mut Vec::new(), 0.0, &mut out);
    out
}

/// Best weight of each (input, output) pair.
pub fn relation(fst: &WeightedFst) -> BTreeMap<(Vec<Label>, Vec<Label>), f64> {
    let mut rel = BTreeMap::new();
    for (i, o, w) in enumerate_paths(fst) {
        let e = rel.entry((i, o)).or_insert(f64::INFINITY);
        *e = f64::min(*e, w);
    }
    rel
}

/// Joins two relations on the middle string.
pub fn compose_relations(
    a: &BTreeMap<(Vec<Label>, Vec<Label>), f64>,
    b: &BTreeMap<(Vec<Label>, Vec<Label>), f64>,
) -> BTreeMap<(Vec<Label>, Vec<Label>), f64> {
    let mut rel = BTreeMap::new();
    for ((x, y), wa) in a {
        for ((y2, z), wb) in b {
            if y == y2 {
                let e = rel.entry((x.clone(), z.clone())).or_insert(f64::INFINITY);
                *e = f64::min(*e, wa + wb);
            }
        }
    }
    rel
}

/// Output strings of an acyclic machine with their best weights, best first;
/// equal weights in string order.
pub fn sorted_output_strings(fst: &WeightedFst) -> Vec<(Vec<Label>, f64)> {
    let mut best: BTreeMap<Vec<Label>, f64> = BTreeMap::new();
    for (_, o, w) in enumerate_paths(fst) {
        let e = best.entry(o).or_insert(f64::INFINITY);
        *e = f64::min(*e, w);
    }
    let mut v: Vec<_> = best.into_iter().collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Uniform unigram model over `words` with no sentence boundaries.
pub fn uniform_unigram(words: &[&str]) -> ArpaModel {
    let lp = -(words.len() as f64).log10();
    let mut text = format!("\\data\\\nngram 1={}\n\n\\1-grams:\n", words.len());
    for w in words {
        text.push_str(&format!("{lp}\t{w}\n"));
    }
    text.push_str("\n\\end\\\n");
    ArpaModel::parse(&text, "uniform").unwrap()
}

pub fn lexicon(entries: &[(&str, &str)]) -> Lexicon {
    let inv = PhoneInventory::arpabet();
    let mut lex = Lexicon::new();
    for (w, p) in entries {
        lex.insert(w, phones(p), &inv).unwrap();
    }
    lex
}

/// The cat/cut world: `ae` is heard as `ah` one time in five.
pub fn cat_cut() -> (Lexicon, ArpaModel, ConfusionMatrix) {
    let lex = lexicon(&[("cat", "k ae t"), ("cut", "k ah t")]);
    let lm = uniform_unigram(&["cat", "cut"]);
    let cm = ConfusionMatrix::from_probabilities([(Phone::from("ae"), vec![(phones("ae"), 0.8), (phones("ah"), 0.2)])])
        .unwrap();
    (lex, lm, cm)
}

fn one_hot(symbols: impl IntoIterator<Item = String>) -> Vec<Vec<(String, f64)>> {
    symbols.into_iter().map(|s| vec![(s, 1.0)]).collect()
}

/// Repeats the input phones back with certainty.
pub struct EchoProvider;

impl DistributionProvider for EchoProvider {
    fn distributions(&self, r: &ProviderRequest<'_>) -> Result<StepDistributions, String> {
        StepDistributions::new(one_hot(r.phones.iter().map(|p| p.to_string()))).map_err(|e| e.to_string())
    }
}

/// Echoes the input, then emits `trailing` end-of-sequence steps.
pub struct EosProvider {
    pub trailing: usize,
}

impl DistributionProvider for EosProvider {
    fn distributions(&self, r: &ProviderRequest<'_>) -> Result<StepDistributions, String> {
        let symbols = r
            .phones
            .iter()
            .map(|p| p.to_string())
            .chain(std::iter::repeat_n(EOS_SYMBOL.to_string(), self.trailing));
        StepDistributions::new(one_hot(symbols)).map_err(|e| e.to_string())
    }
}

/// Hears `ae` as `eh` most of the time, but only right after `r`.
pub struct AfterRProvider;

impl DistributionProvider for AfterRProvider {
    fn distributions(&self, r: &ProviderRequest<'_>) -> Result<StepDistributions, String> {
        let mut steps = Vec::with_capacity(r.phones.len());
        for (i, p) in r.phones.iter().enumerate() {
            let after_r = i > 0 && r.phones[i - 1].as_str() == "r";
            if after_r && p.as_str() == "ae" {
                steps.push(vec![("eh".to_string(), 0.7), ("ae".to_string(), 0.3)]);
            } else {
                steps.push(vec![(p.to_string(), 1.0)]);
            }
        }
        StepDistributions::new(steps).map_err(|e| e.to_string())
    }
}

/// Always fails, to check error propagation.
pub struct BrokenProvider;

impl DistributionProvider for BrokenProvider {
    fn distributions(&self, _: &ProviderRequest<'_>) -> Result<StepDistributions, String> {
        Err("model offline".into())
    }
}
