//! Weighted finite-state transducers over the tropical semiring.
//!
//! Weights are negative natural-log probabilities: paths combine by addition
//! and alternatives by taking the minimum. Label 0 is epsilon on both sides.

mod arpa;
mod build;
mod compose;
mod nbest;
mod text;

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::corpus::{EOS_SYMBOL, EPSILON_SYMBOL};
use crate::error::{Error, Result};

pub use arpa::{build_lm_fst, ArpaModel, NgramEntry};
pub use build::{
    build_confusion_fst, build_lexicon_fst, eos_augment, linear_chain_fst, LexiconDirection,
    PronunciationWeighting, DEFAULT_EOS_COST,
};
pub use compose::compose;
pub use nbest::{nbest_unique, Diagnostics, NBestEntry, NBestList, Ranking, DEFAULT_HYPOTHESIS_CAP};

pub type Label = u32;
pub type StateId = u32;

pub const EPSILON: Label = 0;

/// Converts a probability into an arc weight.
pub fn prob_to_weight(p: f64) -> f64 {
    -p.ln()
}

pub fn weight_to_prob(w: f64) -> f64 {
    (-w).exp()
}

/// Bidirectional map between symbol strings and labels; label 0 is epsilon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<String>,
    index: HashMap<String, Label>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::new()
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        let mut table = SymbolTable {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        table.add(EPSILON_SYMBOL);
        table
    }

    /// Table holding `symbols` in order after epsilon; duplicates are merged.
    pub fn from_symbols<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut table = SymbolTable::new();
        for s in symbols {
            table.add(s.as_ref());
        }
        table
    }

    /// Phone table for an inventory: epsilon, the phones, then EOS.
    pub fn for_phones(inventory: &crate::corpus::PhoneInventory) -> Self {
        let mut table = Self::from_symbols(inventory.phones().iter().map(|p| p.as_str()));
        table.add(EOS_SYMBOL);
        table
    }

    pub fn add(&mut self, symbol: &str) -> Label {
        if let Some(&l) = self.index.get(symbol) {
            return l;
        }
        let label = self.symbols.len() as Label;
        self.symbols.push(symbol.to_string());
        self.index.insert(symbol.to_string(), label);
        label
    }

    pub fn find(&self, symbol: &str) -> Option<Label> {
        self.index.get(symbol).copied()
    }

    pub fn label(&self, symbol: &str) -> Result<Label> {
        self.find(symbol).ok_or_else(|| Error::Symbol(symbol.to_string()))
    }

    pub fn symbol(&self, label: Label) -> Option<&str> {
        self.symbols.get(label as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.len() <= 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, &str)> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (i as Label, s.as_str()))
    }

    /// `symbol<TAB>id` per line.
    pub fn to_text(&self) -> String {
        self.iter().map(|(l, s)| format!("{s}\t{l}\n")).collect()
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(sym), Some(id), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(source, lineno + 1, "expected `symbol id`"));
            };
            let id: Label = id
                .parse()
                .map_err(|e| Error::parse(source, lineno + 1, format!("bad id: {e}")))?;
            pairs.push((id, sym.to_string()));
        }
        pairs.sort();
        let mut table = SymbolTable {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        for (expected, (id, sym)) in pairs.into_iter().enumerate() {
            if id as usize != expected || table.index.contains_key(&sym) {
                return Err(Error::parse(source, 0, "symbol ids must be dense and unique"));
            }
            table.index.insert(sym.clone(), id);
            table.symbols.push(sym);
        }
        if table.symbol(EPSILON) != Some(EPSILON_SYMBOL) {
            return Err(Error::parse(source, 0, "label 0 must be <eps>"));
        }
        Ok(table)
    }
}

fn same_table(a: &Arc<SymbolTable>, b: &Arc<SymbolTable>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub ilabel: Label,
    pub olabel: Label,
    pub weight: f64,
    pub nextstate: StateId,
}

impl Transition {
    pub fn new(ilabel: Label, olabel: Label, weight: f64, nextstate: StateId) -> Self {
        Transition {
            ilabel,
            olabel,
            weight,
            nextstate,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct State {
    arcs: Vec<Transition>,
    final_weight: Option<f64>,
}

/// A mutable-while-building, vector-backed transducer.
#[derive(Debug, Clone)]
pub struct WeightedFst {
    states: Vec<State>,
    start: StateId,
    isyms: Arc<SymbolTable>,
    osyms: Arc<SymbolTable>,
    input_sorted: bool,
}

impl WeightedFst {
    /// A machine with one non-final start state.
    pub fn new(isyms: Arc<SymbolTable>, osyms: Arc<SymbolTable>) -> Self {
        WeightedFst {
            states: vec![State::default()],
            start: 0,
            isyms,
            osyms,
            input_sorted: true,
        }
    }

    pub fn acceptor(syms: Arc<SymbolTable>) -> Self {
        Self::new(syms.clone(), syms)
    }

    pub fn isyms(&self) -> &Arc<SymbolTable> {
        &self.isyms
    }

    pub fn osyms(&self) -> &Arc<SymbolTable> {
        &self.osyms
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn set_start(&mut self, s: StateId) {
        assert!((s as usize) < self.states.len(), "start state {s} does not exist");
        self.start = s;
    }

    pub fn add_state(&mut self) -> StateId {
        self.states.push(State::default());
        (self.states.len() - 1) as StateId
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.states.iter().map(|s| s.arcs.len()).sum()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len() as StateId
    }

    pub fn set_final(&mut self, s: StateId, weight: f64) {
        self.states[s as usize].final_weight = Some(weight);
    }

    pub fn clear_final(&mut self, s: StateId) {
        self.states[s as usize].final_weight = None;
    }

    pub fn final_weight(&self, s: StateId) -> Option<f64> {
        self.states[s as usize].final_weight
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.final_weight(s).is_some()
    }

    pub fn add_arc(&mut self, s: StateId, arc: Transition) {
        assert!(
            (arc.nextstate as usize) < self.states.len(),
            "arc to missing state {}",
            arc.nextstate
        );
        debug_assert!((arc.ilabel as usize) < self.isyms.len());
        debug_assert!((arc.olabel as usize) < self.osyms.len());
        let arcs = &mut self.states[s as usize].arcs;
        if let Some(last) = arcs.last() {
            if last.ilabel > arc.ilabel {
                self.input_sorted = false;
            }
        }
        arcs.push(arc);
    }

    pub fn arcs(&self, s: StateId) -> &[Transition] {
        &self.states[s as usize].arcs
    }

    pub fn is_input_sorted(&self) -> bool {
        self.input_sorted
    }

    /// Stable-sorts every state's arcs by input label.
    pub fn arcsort_input(&mut self) {
        for state in &mut self.states {
            state.arcs.sort_by_key(|a| a.ilabel);
        }
        self.input_sorted = true;
    }

    /// Arcs leaving `s` whose input label is `label`. Requires input-sorted arcs.
    pub(crate) fn arcs_with_input(&self, s: StateId, label: Label) -> &[Transition] {
        debug_assert!(self.input_sorted);
        let arcs = self.arcs(s);
        let lo = arcs.partition_point(|a| a.ilabel < label);
        let hi = lo + arcs[lo..].partition_point(|a| a.ilabel == label);
        &arcs[lo..hi]
    }

    /// Swaps input and output labels (and symbol tables).
    pub fn invert(&self) -> WeightedFst {
        let mut out = self.clone();
        std::mem::swap(&mut out.isyms, &mut out.osyms);
        for state in &mut out.states {
            for arc in &mut state.arcs {
                std::mem::swap(&mut arc.ilabel, &mut arc.olabel);
            }
        }
        out.input_sorted = false;
        out
    }

    /// Removes states that are unreachable from the start or cannot reach a
    /// final state, renumbering the rest in ascending order.
    pub fn connect(&self) -> WeightedFst {
        let n = self.states.len();
        let mut accessible = vec![false; n];
        let mut queue = VecDeque::from([self.start]);
        accessible[self.start as usize] = true;
        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
        while let Some(s) = queue.pop_front() {
            for arc in self.arcs(s) {
                reverse[arc.nextstate as usize].push(s);
                if !accessible[arc.nextstate as usize] {
                    accessible[arc.nextstate as usize] = true;
                    queue.push_back(arc.nextstate);
                }
            }
        }
        let mut coaccessible = vec![false; n];
        for s in 0..n {
            if accessible[s] && self.states[s].final_weight.is_some() {
                coaccessible[s] = true;
                queue.push_back(s as StateId);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &p in &reverse[s as usize] {
                if !coaccessible[p as usize] {
                    coaccessible[p as usize] = true;
                    queue.push_back(p);
                }
            }
        }
        let mut out = WeightedFst::new(self.isyms.clone(), self.osyms.clone());
        if !coaccessible[self.start as usize] {
            return out;
        }
        let mut remap = vec![StateId::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if coaccessible[s] {
                remap[s] = next;
                next += 1;
            }
        }
        out.states = (0..n)
            .filter(|&s| coaccessible[s])
            .map(|s| State {
                final_weight: self.states[s].final_weight,
                arcs: self.states[s]
                    .arcs
                    .iter()
                    .filter(|a| coaccessible[a.nextstate as usize])
                    .map(|a| Transition {
                        nextstate: remap[a.nextstate as usize],
                        ..*a
                    })
                    .collect(),
            })
            .collect();
        out.start = remap[self.start as usize];
        out.input_sorted = self.input_sorted;
        out
    }

    /// True when the machine accepts nothing.
    pub fn is_empty_language(&self) -> bool {
        self.shortest_distance_to_final()[self.start as usize].is_infinite()
    }

    /// Tropical shortest distance from every state to a final state
    /// (including the final weight). Unreachable states get `+inf`.
    ///
    /// Uses label-correcting relaxation, so negative arc weights are fine as
    /// long as there is no negative cycle.
    pub fn shortest_distance_to_final(&self) -> Vec<f64> {
        let n = self.states.len();
        let mut reverse: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); n];
        for (s, state) in self.states.iter().enumerate() {
            for arc in &state.arcs {
                reverse[arc.nextstate as usize].push((s as StateId, arc.weight));
            }
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut queued = vec![false; n];
        let mut queue = VecDeque::new();
        for (s, state) in self.states.iter().enumerate() {
            if let Some(w) = state.final_weight {
                dist[s] = w;
                queued[s] = true;
                queue.push_back(s as StateId);
            }
        }
        while let Some(s) = queue.pop_front() {
            queued[s as usize] = false;
            let d = dist[s as usize];
            for &(p, w) in &reverse[s as usize] {
                let cand = d + w;
                if cand < dist[p as usize] {
                    dist[p as usize] = cand;
                    if !queued[p as usize] {
                        queued[p as usize] = true;
                        queue.push_back(p);
                    }
                }
            }
        }
        dist
    }

    /// Renders an output label sequence through the output symbol table.
    pub fn output_words(&self, labels: &[Label]) -> Vec<String> {
        labels
            .iter()
            .map(|&l| self.osyms.symbol(l).unwrap_or("<?>").to_string())
            .collect()
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn syms() -> Arc<SymbolTable> {
        Arc::new(SymbolTable::from_symbols(["a", "b", "c"]))
    }

    #[test]
    fn symbol_table_round_trip() {
        let t = SymbolTable::from_symbols(["k", "ae", "t", "k"]);
        assert_eq!(t.len(), 4);
        assert_eq!(t.find("t"), Some(3));
        assert_eq!(SymbolTable::parse(&t.to_text(), "s").unwrap(), t);
        assert!(SymbolTable::parse("<eps>\t0\nx\t2\n", "s").is_err());
    }

    #[test]
    fn connect_drops_dead_states() {
        let s = syms();
        let mut f = WeightedFst::acceptor(s);
        let a = f.add_state();
        let dead = f.add_state();
        let unreachable = f.add_state();
        f.add_arc(0, Transition::new(1, 1, 0.5, a));
        f.add_arc(0, Transition::new(2, 2, 0.5, dead));
        f.add_arc(unreachable, Transition::new(3, 3, 0.0, a));
        f.set_final(a, 0.0);
        let c = f.connect();
        assert_eq!(c.num_states(), 2);
        assert_eq!(c.num_arcs(), 1);
        assert_eq!(testing::relation(&c, 4), testing::relation(&f, 4));
    }

    #[test]
    fn connect_of_empty_language() {
        let mut f = WeightedFst::acceptor(syms());
        let a = f.add_state();
        f.add_arc(0, Transition::new(1, 1, 0.0, a));
        let c = f.connect();
        assert_eq!(c.num_states(), 1);
        assert!(c.is_empty_language());
    }

    #[test]
    fn shortest_distance_handles_negative_arcs() {
        let mut f = WeightedFst::acceptor(syms());
        let a = f.add_state();
        let b = f.add_state();
        f.add_arc(0, Transition::new(1, 1, 2.0, a));
        f.add_arc(0, Transition::new(2, 2, 1.0, b));
        f.add_arc(b, Transition::new(0, 0, -0.5, a));
        f.set_final(a, 0.25);
        let d = f.shortest_distance_to_final();
        assert_eq!(d[0], 0.75);
        assert_eq!(d[b as usize], -0.25);
    }

    #[test]
    fn weight_round_trip() {
        for p in [1.0, 0.5, 0.123456789, 1e-9] {
            assert!((weight_to_prob(prob_to_weight(p)) - p).abs() <= 1e-12 * p.max(1e-300) + 1e-15);
        }
    }
}
