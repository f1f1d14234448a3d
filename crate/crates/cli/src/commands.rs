use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use errsim_core::align::{alignment_dump, Alignment, PhoneAligner};
use errsim_core::confmat::{collapse_error_types, smooth_targets, ConfusionMatrix, EstimationOptions};
use errsim_core::corpus::{
    load_lexicon, load_parallel_corpus, words_to_phones, Lexicon, ParallelCorpus, PhoneInventory,
    PronunciationPolicy, TextNormalizer,
};
use errsim_core::eval::evaluate;
use errsim_core::simulate::{
    load_records, merge_kbest, utterance_rng, write_records, DecoderOptions, DistributionOptions, FileProvider,
    Seq2SeqMode, Seq2SeqOptions, SimulationRecord, Simulator, SEQ2SEQ_NBEST,
};
use errsim_core::wfst::{ArpaModel, NBestList};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Direct,
    Sampled,
    Seq2seqDirect,
    Seq2seqSampled,
    Merge,
}

/// Writes to `path`, or stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(format!("stdout: {e}"))),
    }
}

fn inventory(config: &RunConfig) -> Result<PhoneInventory, CliError> {
    Ok(match &config.inventory {
        Some(p) => PhoneInventory::load(p)?,
        None => PhoneInventory::arpabet(),
    })
}

fn corpus(config: &RunConfig) -> Result<ParallelCorpus, CliError> {
    Ok(load_parallel_corpus(config.need(&config.corpus, "corpus")?, &TextNormalizer::default())?)
}

/// Runs `f` over the items on the worker pool and returns the results in
/// input order, or the error of the earliest failing item.
fn per_item<T, U, F>(items: &[T], f: F) -> Result<Vec<U>, CliError>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> errsim_core::Result<U> + Sync + Send,
{
    let results: Vec<_> = items.par_iter().map(f).collect();
    results.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

fn align_corpus(
    inventory: &PhoneInventory,
    lexicon: &Lexicon,
    corpus: &ParallelCorpus,
    indel_cost: f64,
) -> Result<Vec<Alignment>, CliError> {
    let aligner = PhoneAligner::with_indel_cost(inventory, indel_cost);
    per_item(corpus.items(), |item| {
        let r = words_to_phones(&item.gold, lexicon, PronunciationPolicy::First)?;
        let h = words_to_phones(&item.hyp, lexicon, PronunciationPolicy::First)?;
        aligner.align(&r, &h)
    })
}

pub fn train_confmat(config: &RunConfig, output: &Path, targets: Option<&Path>) -> Result<(), CliError> {
    let inv = inventory(config)?;
    let lexicon = load_lexicon(config.need(&config.lexicon, "lexicon")?, &inv)?;
    let corpus = corpus(config)?;
    let alignments = align_corpus(&inv, &lexicon, &corpus, config.indel_cost)?;
    let cm = ConfusionMatrix::estimate(&alignments, &inv, EstimationOptions { add_k: config.add_k })?;
    emit(Some(output), &cm.to_text())?;
    if let Some(path) = targets {
        let mut text = String::new();
        for (phone, _) in cm.rows() {
            let target = smooth_targets(phone, &cm, config.beta)?;
            let line = serde_json::json!({ "phone": phone.as_str(), "probs": target.probs });
            text.push_str(&line.to_string());
            text.push('\n');
        }
        emit(Some(path), &text)?;
    }
    eprintln!("aligned {} utterances, {} matrix rows", alignments.len(), cm.len());
    Ok(())
}

pub fn align_dump(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let inv = inventory(config)?;
    let lexicon = load_lexicon(config.need(&config.lexicon, "lexicon")?, &inv)?;
    let corpus = corpus(config)?;
    let alignments = align_corpus(&inv, &lexicon, &corpus, config.indel_cost)?;
    let blocks: Vec<String> = corpus
        .items()
        .iter()
        .zip(&alignments)
        .map(|(item, a)| format!("# {}\t{}\n{}", item.id, a.cost, alignment_dump(std::iter::once(a))))
        .collect();
    emit(output, &blocks.join("\n"))
}

pub fn simulate(config: &RunConfig, mode: Mode, inputs: &[PathBuf], output: Option<&Path>) -> Result<(), CliError> {
    let records = match mode {
        Mode::Merge => merge(config, inputs)?,
        _ => decode(config, mode)?,
    };
    emit(output, &write_records(&records)?)
}

fn decode(config: &RunConfig, mode: Mode) -> Result<Vec<SimulationRecord>, CliError> {
    let seq2seq = match mode {
        Mode::Seq2seqDirect => Some(Seq2SeqMode::Direct),
        Mode::Seq2seqSampled => Some(Seq2SeqMode::Sampled),
        _ => None,
    };
    if seq2seq.is_some() && config.k < SEQ2SEQ_NBEST {
        return Err(CliError::Usage(format!("sequence-model modes need k >= {SEQ2SEQ_NBEST}")));
    }
    let inv = inventory(config)?;
    let lexicon = load_lexicon(config.need(&config.lexicon, "lexicon")?, &inv)?;
    let lm = ArpaModel::load(config.need(&config.lm, "lm")?)?;
    let cm = ConfusionMatrix::load(config.need(&config.matrix, "matrix")?, &inv)?;
    let provider = match seq2seq {
        Some(_) => Some(FileProvider::load(
            config.need(&config.distributions, "distributions")?,
            config.scores.into(),
        )?),
        None => None,
    };
    let corpus = corpus(config)?;
    let opts = DecoderOptions {
        weighting: config.weighting.into(),
        eos_cost: config.eos_cost,
        hypothesis_cap: config.hypothesis_cap,
    };
    let sim = Simulator::new(&inv, lexicon, &lm, &opts)?;
    let channel = match mode {
        Mode::Direct => Some(sim.confusion_fst(&cm)?),
        _ => None,
    };
    let collapsed = collapse_error_types(&cm);
    let seq2seq_opts = seq2seq.map(|mode| Seq2SeqOptions {
        k: config.k,
        mode,
        distributions: DistributionOptions {
            top_k: config.top_k,
            tau: config.tau,
            scope: config.softmax_scope.into(),
        },
    });

    let lists = per_item(corpus.items(), |item| {
        let mut rng = utterance_rng(config.seed, &item.id);
        match (&channel, &provider, &seq2seq_opts) {
            (Some(channel), _, _) => sim.direct_decode(&item.gold, channel, config.k),
            (_, Some(provider), Some(opts)) => {
                sim.seq2seq_decode(provider, &item.id, &item.gold, &collapsed, opts, &mut rng)
            }
            _ => sim.sampled_decode(&item.gold, &cm, config.iterations, config.k, config.policy(), &mut rng),
        }
    })?;
    let empty = lists.iter().filter(|l| l.is_empty()).count();
    if empty > 0 {
        eprintln!("{empty} utterances produced no alternatives");
    }
    Ok(corpus
        .items()
        .iter()
        .zip(&lists)
        .map(|(item, list)| SimulationRecord::from_list(item.id.clone(), list))
        .collect())
}

/// Interleaves two simulation outputs per utterance, in the order of the first.
fn merge(config: &RunConfig, inputs: &[PathBuf]) -> Result<Vec<SimulationRecord>, CliError> {
    let [a, b] = inputs else {
        return Err(CliError::Usage("merge needs exactly two --input files".into()));
    };
    let first = load_records(a)?;
    let second: HashMap<String, SimulationRecord> =
        load_records(b)?.into_iter().map(|r| (r.id.clone(), r)).collect();
    first
        .iter()
        .map(|ra| {
            let rb = second.get(&ra.id).ok_or_else(|| {
                CliError::Core(errsim_core::Error::Contract(format!(
                    "utterance {} is missing from {}",
                    ra.id,
                    b.display()
                )))
            })?;
            let merged = merge_kbest(&ra.to_list()?, &rb.to_list()?, config.k)?;
            Ok(SimulationRecord::from_list(ra.id.clone(), &merged))
        })
        .collect()
}

pub fn evaluate_run(
    config: &RunConfig,
    predictions: &Path,
    output: Option<&Path>,
    per_utterance: Option<&Path>,
) -> Result<(), CliError> {
    let corpus = corpus(config)?;
    let lists: HashMap<String, NBestList> = load_records(predictions)?
        .into_iter()
        .map(|r| Ok((r.id.clone(), r.to_list()?)))
        .collect::<errsim_core::Result<_>>()?;
    let report = evaluate(corpus.items(), &lists, config.k, config.matching.into());
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(output, &json)?;
    if let Some(path) = per_utterance {
        emit(Some(path), &report.per_utterance_tsv())?;
    }
    eprintln!(
        "chunk recall@{k} {:.2}%, utterance recall@{k} {:.2}%",
        report.chunk_recall,
        report.utterance_recall,
        k = report.k
    );
    Ok(())
}
