use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Label, StateId, WeightedFst, EPSILON};
use crate::error::{Error, Result};

/// Default bound on search-state expansions in [`nbest_unique`].
pub const DEFAULT_HYPOTHESIS_CAP: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBestEntry {
    pub words: Vec<String>,
    /// Best path weight seen for this string.
    pub score: f64,
    /// How many times the string was produced (1 for score-ranked lists).
    pub freq: u32,
}

impl NBestEntry {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// How the entries of an [`NBestList`] are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ranking {
    /// Ascending score.
    Score,
    /// Descending frequency; ties in first-produced order or by score.
    Frequency,
    /// Concatenation of other lists; rank order only.
    Merged,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// The decoding graph accepted nothing for this input.
    pub empty_composition: bool,
    /// Sampling iterations attempted.
    pub attempts: usize,
    /// Sampling iterations that produced no output.
    pub skipped: usize,
}

/// Ranked, duplicate-free word-sequence alternatives for one utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBestList {
    entries: Vec<NBestEntry>,
    ranking: Ranking,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl NBestList {
    pub fn new(entries: Vec<NBestEntry>, ranking: Ranking) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(&e.words) {
                return Err(Error::Contract(format!("duplicate alternative {:?}", e.text())));
            }
        }
        let ordered = entries.windows(2).all(|w| match ranking {
            Ranking::Score => w[0].score <= w[1].score,
            Ranking::Frequency => w[0].freq >= w[1].freq,
            Ranking::Merged => true,
        });
        if !ordered {
            return Err(Error::Contract(format!("entries are not in {ranking:?} order")));
        }
        Ok(NBestList {
            entries,
            ranking,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn empty(ranking: Ranking) -> Self {
        NBestList {
            entries: Vec::new(),
            ranking,
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn entries(&self) -> &[NBestEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<NBestEntry> {
        self.entries
    }

    pub fn ranking(&self) -> Ranking {
        self.ranking
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn contains<S: AsRef<str>>(&self, words: &[S]) -> bool {
        self.entries.iter().any(|e| {
            e.words.len() == words.len() && e.words.iter().zip(words).all(|(a, b)| a == b.as_ref())
        })
    }

    pub fn texts(&self) -> Vec<String> {
        self.entries.iter().map(NBestEntry::text).collect()
    }
}

const SUPERFINAL: StateId = StateId::MAX;
const ROOT: u32 = 0;

#[derive(Debug)]
struct Item {
    priority: f64,
    cost: f64,
    state: StateId,
    prefix: u32,
    seq: u64,
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    // min-heap on priority, then insertion order
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Trie of output-label prefixes; equal strings share one id.
struct PrefixTrie {
    nodes: Vec<(u32, Label)>,
    children: HashMap<(u32, Label), u32>,
}

impl PrefixTrie {
    fn new() -> Self {
        PrefixTrie {
            nodes: vec![(ROOT, EPSILON)],
            children: HashMap::new(),
        }
    }

    fn child(&mut self, parent: u32, label: Label) -> u32 {
        let next = self.nodes.len() as u32;
        *self.children.entry((parent, label)).or_insert_with(|| {
            self.nodes.push((parent, label));
            next
        })
    }

    fn labels(&self, mut id: u32) -> Vec<Label> {
        let mut out = Vec::new();
        while id != ROOT {
            let (parent, label) = self.nodes[id as usize];
            out.push(label);
            id = parent;
        }
        out.reverse();
        out
    }
}

/// The `n` lowest-weight distinct output strings of `fst`, best first.
///
/// Best-first search over (state, output prefix) pairs, guided by the exact
/// distance-to-final of every state. Each pair is expanded at most once, so
/// the first time a complete string is popped it carries its best weight.
/// Fails with [`Error::Resource`] after `cap` expansions.
pub fn nbest_unique(fst: &WeightedFst, n: usize, cap: usize) -> Result<NBestList> {
    let mut entries = Vec::new();
    if n == 0 {
        return NBestList::new(entries, Ranking::Score);
    }
    let potential = fst.shortest_distance_to_final();
    if potential[fst.start() as usize].is_infinite() {
        let mut list = NBestList::empty(Ranking::Score);
        list.diagnostics.empty_composition = true;
        return Ok(list);
    }

    let mut trie = PrefixTrie::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Item>, cost: f64, state: StateId, prefix: u32, h: f64| {
        heap.push(Item {
            priority: cost + h,
            cost,
            state,
            prefix,
            seq,
        });
        seq += 1;
    };
    push(&mut heap, 0.0, fst.start(), ROOT, potential[fst.start() as usize]);

    let mut expanded: HashSet<(StateId, u32)> = HashSet::new();
    let mut emitted: HashSet<u32> = HashSet::new();
    while let Some(item) = heap.pop() {
        if item.state == SUPERFINAL {
            if emitted.insert(item.prefix) {
                entries.push(NBestEntry {
                    words: fst.output_words(&trie.labels(item.prefix)),
                    score: item.cost,
                    freq: 1,
                });
                if entries.len() == n {
                    break;
                }
            }
            continue;
        }
        if !expanded.insert((item.state, item.prefix)) {
            continue;
        }
        if expanded.len() > cap {
            return Err(Error::Resource { cap });
        }
        if let Some(fw) = fst.final_weight(item.state) {
            if !emitted.contains(&item.prefix) {
                push(&mut heap, item.cost + fw, SUPERFINAL, item.prefix, 0.0);
            }
        }
        for arc in fst.arcs(item.state) {
            let h = potential[arc.nextstate as usize];
            if h.is_infinite() {
                continue;
            }
            let prefix = if arc.olabel == EPSILON {
                item.prefix
            } else {
                trie.child(item.prefix, arc.olabel)
            };
            push(&mut heap, item.cost + arc.weight, arc.nextstate, prefix, h);
        }
    }
    // Pop order can disagree with the summed scores in the last ulp.
    entries.sort_by(|a, b| a.score.total_cmp(&b.score));
    NBestList::new(entries, Ranking::Score)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::wfst::testing::enumerate_paths;
    use crate::wfst::{linear_chain_fst, SymbolTable, Transition};

    fn syms() -> Arc<SymbolTable> {
        Arc::new(SymbolTable::from_symbols(["a", "b", "c"]))
    }

    fn path(f: &mut WeightedFst, labels: &[Label], w: f64) {
        let mut s = f.start();
        for (i, &l) in labels.iter().enumerate() {
            let next = f.add_state();
            let weight = if i == 0 { w } else { 0.0 };
            f.add_arc(s, Transition::new(l, l, weight, next));
            s = next;
        }
        f.set_final(s, 0.0);
    }

    #[test]
    fn duplicate_paths_collapse() {
        let mut f = WeightedFst::acceptor(syms());
        path(&mut f, &[1, 2], 1.0);
        path(&mut f, &[1, 2], 2.0);
        path(&mut f, &[1, 3], 1.5);
        let list = nbest_unique(&f, 2, 1000).unwrap();
        assert_eq!(list.texts(), vec!["a b", "a c"]);
        assert_eq!(list.entries()[0].score, 1.0);
        assert_eq!(list.entries()[1].score, 1.5);
        let all = nbest_unique(&f, 10, 1000).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn single_path() {
        let s = syms();
        let chain = linear_chain_fst(&["c", "a"], &s).unwrap();
        let list = nbest_unique(&chain, 1, 100).unwrap();
        assert_eq!(list.texts(), vec!["c a"]);
        assert_eq!(list.entries()[0].score, 0.0);
    }

    #[test]
    fn empty_language_flagged() {
        let f = WeightedFst::acceptor(syms());
        let list = nbest_unique(&f, 3, 100).unwrap();
        assert!(list.is_empty());
        assert!(list.diagnostics.empty_composition);
    }

    #[test]
    fn cyclic_language_hits_cap() {
        let mut f = WeightedFst::acceptor(syms());
        f.add_arc(0, Transition::new(1, 1, 0.0, 0));
        f.set_final(0, 0.0);
        assert!(nbest_unique(&f, 5, 1000).unwrap().len() == 5);
        assert!(matches!(nbest_unique(&f, 5000, 100), Err(Error::Resource { cap: 100 })));
    }

    #[test]
    fn epsilon_output_cycles_terminate() {
        let mut f = WeightedFst::acceptor(syms());
        let a = f.add_state();
        f.add_arc(0, Transition::new(1, 1, 1.0, a));
        f.add_arc(a, Transition::new(2, EPSILON, 0.5, a));
        f.set_final(a, 0.0);
        let list = nbest_unique(&f, 5, 1000).unwrap();
        assert_eq!(list.texts(), vec!["a"]);
    }

    #[test]
    fn list_rejects_duplicates_and_misordering() {
        let e = |w: &str, score: f64, freq: u32| NBestEntry {
            words: vec![w.to_string()],
            score,
            freq,
        };
        assert!(NBestList::new(vec![e("x", 1.0, 1), e("x", 2.0, 1)], Ranking::Score).is_err());
        assert!(NBestList::new(vec![e("x", 2.0, 1), e("y", 1.0, 1)], Ranking::Score).is_err());
        assert!(NBestList::new(vec![e("x", 2.0, 1), e("y", 1.0, 3)], Ranking::Frequency).is_err());
        assert!(NBestList::new(vec![e("x", 2.0, 1), e("y", 1.0, 3)], Ranking::Merged).is_ok());
    }

    /// Random acyclic machine: arcs only go to higher-numbered states.
    fn arb_acyclic() -> impl Strategy<Value = WeightedFst> {
        (
            2usize..=7,
            prop::collection::vec((0u32..7, 1u32..7, 0u32..4, 0u32..4, -4i32..12), 1..16),
            prop::collection::vec(prop::option::of(0u32..4), 7),
        )
            .prop_map(|(n, arcs, finals)| {
                let mut f = WeightedFst::acceptor(syms());
                for _ in 1..n {
                    f.add_state();
                }
                for (src, delta, i, o, w) in arcs {
                    let src = src % (n as u32 - 1);
                    let dst = (src + delta).min(n as u32 - 1);
                    if dst > src {
                        f.add_arc(src, Transition::new(i, o, w as f64 * 0.25, dst));
                    }
                }
                for (s, fw) in finals.into_iter().enumerate().take(n) {
                    if let Some(w) = fw {
                        f.set_final(s as StateId, w as f64 * 0.5);
                    }
                }
                f
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn matches_sorted_enumeration(f in arb_acyclic(), n in 1usize..12) {
            let mut best: BTreeMap<Vec<Label>, f64> = BTreeMap::new();
            for (_, o, w) in enumerate_paths(&f, 64) {
                let e = best.entry(o).or_insert(f64::INFINITY);
                *e = e.min(w);
            }
            let mut expected: Vec<(Vec<Label>, f64)> = best.into_iter().collect();
            expected.sort_by(|a, b| a.1.total_cmp(&b.1));
            let got = nbest_unique(&f, n, 100_000).unwrap();
            prop_assert_eq!(got.len(), expected.len().min(n));
            for (entry, (_, w)) in got.entries().iter().zip(&expected) {
                prop_assert!((entry.score - w).abs() < 1e-9);
            }
            // Each returned string carries its own best weight.
            for entry in got.entries() {
                let labels: Vec<Label> = entry.words.iter().map(|w| f.osyms().find(w).unwrap()).collect();
                let w = expected.iter().find(|(o, _)| *o == labels).unwrap().1;
                prop_assert!((entry.score - w).abs() < 1e-9);
            }
        }
    }
}
