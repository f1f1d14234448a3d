use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::wfst::{NBestEntry, NBestList, Ranking};

/// Combines two ranked lists: the first `k/2` of `a`, then the first `k/2` of
/// `b`, dropping repeats, then the remainders of both taken alternately
/// until `k` entries are collected.
pub fn merge_kbest<'a>(a: &'a NBestList, b: &'a NBestList, k: usize) -> Result<NBestList> {
    if !k.is_multiple_of(2) {
        return Err(Error::Contract(format!("merge size must be even, got {k}")));
    }
    let half = k / 2;
    let (a, b) = (a.entries(), b.entries());
    let mut seen: HashSet<&Vec<String>> = HashSet::new();
    let mut out: Vec<NBestEntry> = Vec::with_capacity(k);
    let mut take = |e: &'a NBestEntry, out: &mut Vec<NBestEntry>| {
        if out.len() < k && seen.insert(&e.words) {
            out.push(e.clone());
        }
    };
    for e in a.iter().take(half).chain(b.iter().take(half)) {
        take(e, &mut out);
    }
    let mut rest_a = a.iter().skip(half);
    let mut rest_b = b.iter().skip(half);
    while out.len() < k {
        let (x, y) = (rest_a.next(), rest_b.next());
        if x.is_none() && y.is_none() {
            break;
        }
        for e in x.into_iter().chain(y) {
            take(e, &mut out);
        }
    }
    NBestList::new(out, Ranking::Merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(texts: &[&str]) -> NBestList {
        let entries = texts
            .iter()
            .enumerate()
            .map(|(i, t)| NBestEntry {
                words: t.split_whitespace().map(String::from).collect(),
                score: i as f64,
                freq: 1,
            })
            .collect();
        NBestList::new(entries, Ranking::Score).unwrap()
    }

    #[test]
    fn overlapping_lists() {
        let m = merge_kbest(&list(&["x", "y"]), &list(&["y", "z"]), 4).unwrap();
        assert_eq!(m.texts(), vec!["x", "y", "z"]);
        assert_eq!(m.ranking(), Ranking::Merged);
    }

    #[test]
    fn disjoint_halves() {
        let a: Vec<String> = (0..60).map(|i| format!("a{i}")).collect();
        let b: Vec<String> = (0..60).map(|i| format!("b{i}")).collect();
        let la = list(&a.iter().map(String::as_str).collect::<Vec<_>>());
        let lb = list(&b.iter().map(String::as_str).collect::<Vec<_>>());
        let m = merge_kbest(&la, &lb, 100).unwrap();
        assert_eq!(m.len(), 100);
        assert_eq!(m.texts()[..50], a[..50]);
        assert_eq!(m.texts()[50..], b[..50]);
    }

    #[test]
    fn identical_lists_backfill() {
        let texts = ["p", "q", "r", "s", "t"];
        let m = merge_kbest(&list(&texts), &list(&texts), 4).unwrap();
        assert_eq!(m.texts(), vec!["p", "q", "r", "s"]);
        let m = merge_kbest(&list(&texts), &list(&texts), 10).unwrap();
        assert_eq!(m.len(), 5);
    }

    #[test]
    fn odd_k_rejected() {
        assert!(merge_kbest(&list(&["x"]), &list(&["y"]), 3).is_err());
    }
}
