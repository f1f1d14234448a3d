use std::sync::Arc;

use super::{prob_to_weight, StateId, SymbolTable, Transition, WeightedFst, EPSILON};
use crate::confmat::ConfusionMatrix;
use crate::corpus::{Lexicon, EOS_SYMBOL};
use crate::error::{Error, Result};

pub const DEFAULT_EOS_COST: f64 = 0.1;

/// Acceptor for exactly `seq`, with weight 0.
pub fn linear_chain_fst<S: AsRef<str>>(seq: &[S], syms: &Arc<SymbolTable>) -> Result<WeightedFst> {
    let mut fst = WeightedFst::acceptor(syms.clone());
    let mut state = fst.start();
    for symbol in seq {
        let label = syms.label(symbol.as_ref())?;
        let next = fst.add_state();
        fst.add_arc(state, Transition::new(label, label, 0.0, next));
        state = next;
    }
    fst.set_final(state, 0.0);
    Ok(fst)
}

/// Single-state transducer realizing the confusion matrix.
///
/// An alternative of length n becomes a path whose first arc reads the input
/// phone, writes the first output phone and carries the whole `-ln p`; the
/// remaining outputs hang off epsilon-input arcs through fresh states.
/// Deletions are `phone:<eps>` arcs. Phones in `phone_syms` that have no row
/// pass through unchanged.
pub fn build_confusion_fst(cm: &ConfusionMatrix, phone_syms: &Arc<SymbolTable>) -> Result<WeightedFst> {
    let mut fst = WeightedFst::acceptor(phone_syms.clone());
    let hub = fst.start();
    fst.set_final(hub, 0.0);
    for (phone, row) in cm.rows() {
        let input = phone_syms.label(phone.as_str())?;
        for alt in row.alternatives() {
            let weight = prob_to_weight(alt.prob);
            let outputs = alt
                .output
                .iter()
                .map(|p| phone_syms.label(p.as_str()))
                .collect::<Result<Vec<_>>>()?;
            match outputs.split_first() {
                None => fst.add_arc(hub, Transition::new(input, EPSILON, weight, hub)),
                Some((&first, rest)) => {
                    let mut state = hub;
                    let mut ilabel = input;
                    let mut w = weight;
                    for (k, &out) in std::iter::once(&first).chain(rest).enumerate() {
                        let next = if k == outputs.len() - 1 {
                            hub
                        } else {
                            fst.add_state()
                        };
                        fst.add_arc(state, Transition::new(ilabel, out, w, next));
                        state = next;
                        ilabel = EPSILON;
                        w = 0.0;
                    }
                }
            }
        }
    }
    let eos = phone_syms.find(EOS_SYMBOL);
    for (label, symbol) in phone_syms.iter().skip(1) {
        if Some(label) != eos && cm.row(&symbol.into()).is_none() {
            fst.add_arc(hub, Transition::new(label, label, 0.0, hub));
        }
    }
    fst.arcsort_input();
    Ok(fst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconDirection {
    PhonesToWords,
    WordsToPhones,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PronunciationWeighting {
    /// Every pronunciation costs 0.
    #[default]
    Uniform,
    /// Each pronunciation costs `-ln(1 / #pronunciations)`.
    InverseCount,
}

/// Lexicon transducer closed under concatenation.
///
/// In the phones-to-words direction each pronunciation is a loop through the
/// start state that emits the word on its first arc.
pub fn build_lexicon_fst(
    lexicon: &Lexicon,
    direction: LexiconDirection,
    phone_syms: &Arc<SymbolTable>,
    word_syms: &Arc<SymbolTable>,
    weighting: PronunciationWeighting,
) -> Result<WeightedFst> {
    if lexicon.is_empty() {
        return Err(Error::Contract("empty lexicon".into()));
    }
    let mut fst = WeightedFst::new(phone_syms.clone(), word_syms.clone());
    let hub = fst.start();
    fst.set_final(hub, 0.0);
    for (word, prons) in lexicon.iter() {
        let word_label = word_syms.label(word)?;
        let weight = match weighting {
            PronunciationWeighting::Uniform => 0.0,
            PronunciationWeighting::InverseCount => prob_to_weight(1.0 / prons.len() as f64),
        };
        for pron in prons {
            let mut state: StateId = hub;
            for (k, phone) in pron.iter().enumerate() {
                let label = phone_syms.label(phone.as_str())?;
                let next = if k + 1 == pron.len() {
                    hub
                } else {
                    fst.add_state()
                };
                let arc = if k == 0 {
                    Transition::new(label, word_label, weight, next)
                } else {
                    Transition::new(label, EPSILON, 0.0, next)
                };
                fst.add_arc(state, arc);
                state = next;
            }
        }
    }
    let mut fst = match direction {
        LexiconDirection::PhonesToWords => fst,
        LexiconDirection::WordsToPhones => fst.invert(),
    };
    fst.arcsort_input();
    Ok(fst)
}

/// Adds an `EOS:<eps>` self-loop of weight `eos_cost` to every final state.
pub fn eos_augment(graph: &WeightedFst, eos_cost: f64) -> Result<WeightedFst> {
    if !(eos_cost >= 0.0 && eos_cost.is_finite()) {
        return Err(Error::Contract(format!("eos cost must be >= 0, got {eos_cost}")));
    }
    let eos = graph.isyms().label(EOS_SYMBOL)?;
    let mut out = graph.clone();
    for s in graph.states() {
        if graph.is_final(s) {
            out.add_arc(s, Transition::new(eos, EPSILON, eos_cost, s));
        }
    }
    out.arcsort_input();
    Ok(out)
}
