mod support;

use std::collections::HashMap;

use errsim_core::confmat::{collapse_error_types, CollapsedErrorMatrix, ConfusionMatrix};
use errsim_core::corpus::{phones, Phone, PhoneInventory, PronunciationPolicy};
use errsim_core::simulate::{
    merge_kbest, utterance_rng, DecoderOptions, DistributionOptions, Seq2SeqMode, Seq2SeqOptions, Simulator,
    ATTEMPTS_PER_ALTERNATIVE,
};
use errsim_core::wfst::Ranking;
use errsim_core::Error;
use support::*;

fn cat_cut_simulator() -> (Simulator, ConfusionMatrix) {
    let (lex, lm, cm) = cat_cut();
    let sim = Simulator::new(&PhoneInventory::arpabet(), lex, &lm, &DecoderOptions::default()).unwrap();
    (sim, cm)
}

fn seq2seq(k: usize, mode: Seq2SeqMode) -> Seq2SeqOptions {
    Seq2SeqOptions {
        k,
        mode,
        distributions: DistributionOptions::default(),
    }
}

#[test]
fn direct_decode_ranks_by_channel() {
    let (sim, cm) = cat_cut_simulator();
    let channel = sim.confusion_fst(&cm).unwrap();
    let list = sim.direct_decode(&["cat"], &channel, 2).unwrap();
    assert_eq!(list.texts(), vec!["cat", "cut"]);
    assert!((list.entries()[0].score - (-0.8f64.ln() + 2f64.ln())).abs() < 1e-9);
    assert!((list.entries()[1].score - (-0.2f64.ln() + 2f64.ln())).abs() < 1e-9);
    assert_eq!(list.ranking(), Ranking::Score);
}

#[test]
fn direct_decode_returns_what_exists() {
    let (sim, cm) = cat_cut_simulator();
    let channel = sim.confusion_fst(&cm).unwrap();
    assert_eq!(sim.direct_decode(&["cat"], &channel, 100).unwrap().len(), 2);
    assert_eq!(sim.direct_decode(&["cut"], &channel, 100).unwrap().texts(), vec!["cut"]);
}

#[test]
fn unknown_word_is_reported() {
    let (sim, cm) = cat_cut_simulator();
    let channel = sim.confusion_fst(&cm).unwrap();
    assert!(matches!(sim.direct_decode(&["dog"], &channel, 5), Err(Error::MissingWord(w)) if w == "dog"));
}

#[test]
fn three_homophones_all_surface() {
    let lex = lexicon(&[("cat", "k ae t"), ("kat", "k ae t"), ("cut", "k ah t")]);
    let lm = uniform_unigram(&["cat", "kat", "cut"]);
    let sim = Simulator::new(&PhoneInventory::arpabet(), lex, &lm, &DecoderOptions::default()).unwrap();
    let (_, _, cm) = cat_cut();
    let channel = sim.confusion_fst(&cm).unwrap();
    let list = sim.direct_decode(&["cat"], &channel, 100).unwrap();
    assert_eq!(list.len(), 3);
    assert_eq!(list.texts()[2], "cut");
}

#[test]
fn identity_channel_reproduces_input() {
    let lex = lexicon(&[("cat", "k ae t"), ("cut", "k ah t"), ("sat", "s ae t")]);
    let lm = uniform_unigram(&["cat", "cut", "sat"]);
    let inv = PhoneInventory::arpabet();
    let sim = Simulator::new(&inv, lex, &lm, &DecoderOptions::default()).unwrap();
    let cm = ConfusionMatrix::identity(&inv);
    let channel = sim.confusion_fst(&cm).unwrap();
    let words = ["sat", "cat", "cut"];
    assert_eq!(sim.direct_decode(&words, &channel, 1).unwrap().texts(), vec!["sat cat cut"]);
    let mut rng = utterance_rng(1, "u");
    let list = sim.sampled_decode(&words, &cm, 20, 100, PronunciationPolicy::First, &mut rng).unwrap();
    assert_eq!(list.texts(), vec!["sat cat cut"]);
    assert_eq!(list.entries()[0].freq, 20);
}

#[test]
fn sampled_frequency_follows_channel() {
    let (sim, cm) = cat_cut_simulator();
    let mut rng = utterance_rng(11, "u1");
    let list = sim.sampled_decode(&["cat"], &cm, 200, 100, PronunciationPolicy::First, &mut rng).unwrap();
    assert_eq!(list.texts(), vec!["cat", "cut"]);
    let (cat, cut) = (list.entries()[0].freq, list.entries()[1].freq);
    assert_eq!(cat + cut, 200);
    assert!(cat > cut);
    // the first draw is ae with probability 0.8
    let se = (0.8 * 0.2 / 200.0f64).sqrt();
    assert!((cat as f64 / 200.0 - 0.8).abs() < 4.0 * se);
    assert_eq!(list.diagnostics.attempts, 200);
    assert_eq!(list.diagnostics.skipped, 0);
}

#[test]
fn single_iteration_single_entry() {
    let (sim, cm) = cat_cut_simulator();
    let mut rng = utterance_rng(3, "u");
    let list = sim.sampled_decode(&["cat"], &cm, 1, 100, PronunciationPolicy::First, &mut rng).unwrap();
    assert_eq!(list.len(), 1);
    assert!(sim.sampled_decode(&["cat"], &cm, 0, 100, PronunciationPolicy::First, &mut rng).is_err());
}

#[test]
fn sampled_truncates_to_k() {
    let (sim, cm) = cat_cut_simulator();
    let mut rng = utterance_rng(5, "u");
    let list = sim.sampled_decode(&["cat", "cat"], &cm, 300, 2, PronunciationPolicy::First, &mut rng).unwrap();
    assert_eq!(list.len(), 2);
    assert_eq!(list.texts()[0], "cat cat");
}

#[test]
fn sampled_is_reproducible_per_utterance() {
    let (sim, cm) = cat_cut_simulator();
    let run = |seed| {
        let mut rng = utterance_rng(seed, "u9");
        sim.sampled_decode(&["cat", "cut", "cat"], &cm, 50, 100, PronunciationPolicy::First, &mut rng)
            .unwrap()
            .entries()
            .iter()
            .map(|e| (e.text(), e.freq))
            .collect::<Vec<_>>()
    };
    assert_eq!(run(4), run(4));
}

#[test]
fn undecodable_samples_are_skipped() {
    // t is always deleted, so no lexicon word survives
    let (sim, _) = cat_cut_simulator();
    let cm = ConfusionMatrix::from_probabilities([(Phone::from("t"), vec![(Vec::new(), 1.0)])]).unwrap();
    let mut rng = utterance_rng(2, "u");
    let list = sim.sampled_decode(&["cat"], &cm, 10, 100, PronunciationPolicy::First, &mut rng).unwrap();
    assert!(list.is_empty());
    assert_eq!(list.diagnostics.skipped, 10);
}

fn no_error_cues(inv: &PhoneInventory) -> CollapsedErrorMatrix {
    collapse_error_types(&ConfusionMatrix::identity(inv))
}

#[test]
fn echo_provider_returns_input() {
    let (sim, _) = cat_cut_simulator();
    let cues = no_error_cues(&PhoneInventory::arpabet());
    for mode in [Seq2SeqMode::Direct, Seq2SeqMode::Sampled] {
        let mut rng = utterance_rng(1, "u");
        let list = sim.seq2seq_decode(&EchoProvider, "u", &["cut", "cat"], &cues, &seq2seq(5, mode), &mut rng).unwrap();
        assert_eq!(list.texts()[0], "cut cat");
        assert_eq!(list.len(), 1);
        assert_eq!(list.diagnostics.attempts, 5 * ATTEMPTS_PER_ALTERNATIVE);
    }
}

#[test]
fn trailing_eos_needs_absorption() {
    let (sim, _) = cat_cut_simulator();
    let cues = no_error_cues(&PhoneInventory::arpabet());
    let mut rng = utterance_rng(1, "u");
    let list = sim
        .seq2seq_decode(&EosProvider { trailing: 2 }, "u", &["cat"], &cues, &seq2seq(5, Seq2SeqMode::Direct), &mut rng)
        .unwrap();
    assert_eq!(list.texts(), vec!["cat"]);
    assert!(list.entries()[0].score > 0.0);
}

#[test]
fn context_dependent_errors_stay_in_context() {
    let lex = lexicon(&[("rat", "r ae t"), ("ret", "r eh t"), ("cat", "k ae t"), ("ket", "k eh t")]);
    let lm = uniform_unigram(&["rat", "ret", "cat", "ket"]);
    let inv = PhoneInventory::arpabet();
    let sim = Simulator::new(&inv, lex, &lm, &DecoderOptions::default()).unwrap();
    let cues = no_error_cues(&inv);
    let decode = |words: &[&str]| {
        let mut rng = utterance_rng(8, "u");
        sim.seq2seq_decode(&AfterRProvider, "u", words, &cues, &seq2seq(5, Seq2SeqMode::Direct), &mut rng)
            .unwrap()
            .texts()
    };
    assert_eq!(decode(&["rat"])[0], "ret");
    assert!(decode(&["rat"]).contains(&"rat".to_string()));
    assert_eq!(decode(&["cat"]), vec!["cat"]);

    // a context-free matrix with the same ae row spreads the error everywhere
    let cm = ConfusionMatrix::from_probabilities([(Phone::from("ae"), vec![(phones("ae"), 0.7), (phones("eh"), 0.3)])])
        .unwrap();
    let mut rng = utterance_rng(8, "u");
    let cat = sim.sampled_decode(&["cat"], &cm, 100, 100, PronunciationPolicy::First, &mut rng).unwrap();
    assert!(cat.contains(&["ket".to_string()]));
}

#[test]
fn provider_failure_carries_cues() {
    let (sim, _) = cat_cut_simulator();
    let cues = no_error_cues(&PhoneInventory::arpabet());
    let mut rng = utterance_rng(1, "u");
    match sim.seq2seq_decode(&BrokenProvider, "u", &["cat"], &cues, &seq2seq(5, Seq2SeqMode::Direct), &mut rng) {
        Err(Error::Provider { cues, message }) => {
            assert_eq!(cues, "no-error no-error no-error");
            assert_eq!(message, "model offline");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn seq2seq_needs_five() {
    let (sim, _) = cat_cut_simulator();
    let cues = no_error_cues(&PhoneInventory::arpabet());
    let mut rng = utterance_rng(1, "u");
    let r = sim.seq2seq_decode(&EchoProvider, "u", &["cat"], &cues, &seq2seq(4, Seq2SeqMode::Direct), &mut rng);
    assert!(matches!(r, Err(Error::Contract(_))));
}

#[test]
fn merged_lists_combine_sources() {
    let (sim, cm) = cat_cut_simulator();
    let channel = sim.confusion_fst(&cm).unwrap();
    let direct = sim.direct_decode(&["cat"], &channel, 2).unwrap();
    let cues = no_error_cues(&PhoneInventory::arpabet());
    let mut rng = utterance_rng(1, "u");
    let echo = sim.seq2seq_decode(&EchoProvider, "u", &["cat"], &cues, &seq2seq(5, Seq2SeqMode::Direct), &mut rng).unwrap();
    let merged = merge_kbest(&echo, &direct, 4).unwrap();
    assert_eq!(merged.texts(), vec!["cat", "cut"]);
    assert_eq!(merged.ranking(), Ranking::Merged);
}

#[test]
fn utterance_streams_are_independent_of_order() {
    let (sim, cm) = cat_cut_simulator();
    let ids = ["a", "b", "c"];
    let run = |order: &[&str]| -> HashMap<String, Vec<String>> {
        order
            .iter()
            .map(|id| {
                let mut rng = utterance_rng(42, id);
                let l = sim.sampled_decode(&["cat", "cat"], &cm, 30, 100, PronunciationPolicy::First, &mut rng).unwrap();
                (id.to_string(), l.texts())
            })
            .collect()
    };
    assert_eq!(run(&ids), run(&["c", "a", "b"]));
}
