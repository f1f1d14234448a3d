use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lattice::{chain_lattice, distributions_to_fst, DistributionOptions, LatticePosition};
use super::provider::{DistributionProvider, ProviderRequest};
use super::sampling::{sample_alternatives, sample_cues, sample_ranked};
use crate::confmat::{CollapsedErrorMatrix, ConfusionMatrix};
use crate::corpus::{words_to_phones, Lexicon, Phone, PhoneInventory, PronunciationPolicy};
use crate::error::{Error, Result};
use crate::wfst::{
    build_confusion_fst, build_lexicon_fst, build_lm_fst, compose, eos_augment, linear_chain_fst, nbest_unique,
    ArpaModel, Diagnostics, LexiconDirection, NBestEntry, NBestList, PronunciationWeighting, Ranking, SymbolTable,
    WeightedFst, DEFAULT_EOS_COST, DEFAULT_HYPOTHESIS_CAP,
};

/// Strings kept per attempt in the sequence-model modes.
pub const SEQ2SEQ_NBEST: usize = 5;
/// Symbols drawn per step in sampled sequence-model mode.
pub const SEQ2SEQ_DRAWS: usize = 3;
/// Attempt budget per requested alternative in the sequence-model modes.
pub const ATTEMPTS_PER_ALTERNATIVE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOptions {
    pub weighting: PronunciationWeighting,
    pub eos_cost: f64,
    pub hypothesis_cap: usize,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        DecoderOptions {
            weighting: PronunciationWeighting::Uniform,
            eos_cost: DEFAULT_EOS_COST,
            hypothesis_cap: DEFAULT_HYPOTHESIS_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seq2SeqMode {
    Direct,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seq2SeqOptions {
    pub k: usize,
    pub mode: Seq2SeqMode,
    pub distributions: DistributionOptions,
}

/// Shared decoding machinery for one lexicon and language model.
///
/// Holds the words-to-phones transducer and the phones-to-words decoding
/// graph (lexicon composed with the LM), plus an EOS-absorbing copy of the
/// latter. Everything is immutable after construction.
#[derive(Debug, Clone)]
pub struct Simulator {
    lexicon: Lexicon,
    phone_syms: Arc<SymbolTable>,
    word_syms: Arc<SymbolTable>,
    spell: WeightedFst,
    decode: WeightedFst,
    decode_eos: WeightedFst,
    cap: usize,
}

impl Simulator {
    pub fn new(inventory: &PhoneInventory, lexicon: Lexicon, lm: &ArpaModel, opts: &DecoderOptions) -> Result<Self> {
        let phone_syms = Arc::new(SymbolTable::for_phones(inventory));
        let word_syms = Arc::new(SymbolTable::from_symbols(lexicon.words()));
        let p = build_lexicon_fst(&lexicon, LexiconDirection::PhonesToWords, &phone_syms, &word_syms, opts.weighting)?;
        let spell = build_lexicon_fst(&lexicon, LexiconDirection::WordsToPhones, &phone_syms, &word_syms, opts.weighting)?;
        let l = build_lm_fst(lm, &word_syms)?;
        let mut decode = compose(&p, &l)?;
        decode.arcsort_input();
        let decode_eos = eos_augment(&decode, opts.eos_cost)?;
        Ok(Simulator {
            lexicon,
            phone_syms,
            word_syms,
            spell,
            decode,
            decode_eos,
            cap: opts.hypothesis_cap,
        })
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn phone_syms(&self) -> &Arc<SymbolTable> {
        &self.phone_syms
    }

    pub fn word_syms(&self) -> &Arc<SymbolTable> {
        &self.word_syms
    }

    /// Lexicon composed with the language model, phones in and words out.
    pub fn decoding_graph(&self) -> &WeightedFst {
        &self.decode
    }

    pub fn eos_decoding_graph(&self) -> &WeightedFst {
        &self.decode_eos
    }

    pub fn confusion_fst(&self, cm: &ConfusionMatrix) -> Result<WeightedFst> {
        build_confusion_fst(cm, &self.phone_syms)
    }

    /// The `n` best word strings of a phone lattice.
    pub fn decode_lattice(&self, lattice: &WeightedFst, n: usize, absorb_eos: bool) -> Result<NBestList> {
        let graph = if absorb_eos { &self.decode_eos } else { &self.decode };
        nbest_unique(&compose(lattice, graph)?, n, self.cap)
    }

    fn word_labels<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<String>> {
        words
            .iter()
            .map(|w| {
                let w = w.as_ref().to_lowercase();
                if self.lexicon.contains(&w) {
                    Ok(w)
                } else {
                    Err(Error::MissingWord(w))
                }
            })
            .collect()
    }

    /// Decodes the word sequence through every pronunciation, the confusion
    /// transducer `channel` and the decoding graph, keeping the `n` best
    /// distinct word strings.
    pub fn direct_decode<S: AsRef<str>>(&self, words: &[S], channel: &WeightedFst, n: usize) -> Result<NBestList> {
        let words = self.word_labels(words)?;
        let w = linear_chain_fst(&words, &self.word_syms)?;
        let lattice = compose(&compose(&w, &self.spell)?, channel)?;
        self.decode_lattice(&lattice, n, false)
    }

    /// Repeatedly samples a two-way lattice from `cm`, decodes its best word
    /// string and ranks the distinct results by how often they occur.
    pub fn sampled_decode<S: AsRef<str>, R: Rng + ?Sized>(
        &self,
        words: &[S],
        cm: &ConfusionMatrix,
        iterations: usize,
        k: usize,
        policy: PronunciationPolicy,
        rng: &mut R,
    ) -> Result<NBestList> {
        if iterations == 0 {
            return Err(Error::Contract("iterations must be at least 1".into()));
        }
        let words = self.word_labels(words)?;
        let fixed = match policy {
            PronunciationPolicy::First => Some(words_to_phones(&words, &self.lexicon, policy)?),
            PronunciationPolicy::Sample { .. } => None,
        };
        let mut memo: HashMap<Vec<u32>, Option<NBestEntry>> = HashMap::new();
        let mut tally = Tally::default();
        let mut diagnostics = Diagnostics::default();
        for _ in 0..iterations {
            let phones = match &fixed {
                Some(p) => p.clone(),
                None => words_to_phones(&words, &self.lexicon, PronunciationPolicy::Sample { seed: rng.gen() })?,
            };
            let mut key = Vec::with_capacity(phones.len() * 3);
            let mut positions: Vec<LatticePosition> = Vec::with_capacity(phones.len());
            for phone in &phones {
                let row = cm.row_or_identity(phone);
                let draws = sample_alternatives(&row, rng);
                key.push(self.phone_syms.label(phone.as_str())?);
                let mut position = Vec::with_capacity(draws.len());
                for d in &draws {
                    key.push(d.index as u32);
                    position.push((self.phone_labels(&row.alternatives()[d.index].output)?, d.weight));
                }
                key.push(u32::MAX);
                positions.push(position);
            }
            diagnostics.attempts += 1;
            let best = match memo.get(&key) {
                Some(hit) => hit.clone(),
                None => {
                    let lattice = chain_lattice(&positions, &self.phone_syms)?;
                    let best = self.decode_lattice(&lattice, 1, false)?.into_entries().into_iter().next();
                    memo.insert(key, best.clone());
                    best
                }
            };
            match best {
                Some(entry) => tally.add(entry),
                None => diagnostics.skipped += 1,
            }
        }
        let mut list = tally.into_list(k, false)?;
        list.diagnostics = diagnostics;
        Ok(list)
    }

    /// Bridges a sequence model into word alternatives: samples cues, asks
    /// `provider` for step distributions, turns them into a lattice and keeps
    /// the five best strings of each attempt, until `k` distinct strings are
    /// collected or the attempt budget runs out.
    #[allow(clippy::too_many_arguments)]
    pub fn seq2seq_decode<S: AsRef<str>, R: Rng + ?Sized>(
        &self,
        provider: &dyn DistributionProvider,
        utterance_id: &str,
        words: &[S],
        collapsed: &CollapsedErrorMatrix,
        opts: &Seq2SeqOptions,
        rng: &mut R,
    ) -> Result<NBestList> {
        if opts.k < SEQ2SEQ_NBEST {
            return Err(Error::Contract(format!("k must be at least {SEQ2SEQ_NBEST}, got {}", opts.k)));
        }
        let words = self.word_labels(words)?;
        let phones = words_to_phones(&words, &self.lexicon, PronunciationPolicy::First)?;
        let mut memo: HashMap<String, Vec<NBestEntry>> = HashMap::new();
        let mut tally = Tally::default();
        let mut diagnostics = Diagnostics::default();
        for attempt in 0..ATTEMPTS_PER_ALTERNATIVE * opts.k {
            let cues = sample_cues(collapsed, &phones, rng);
            let request = ProviderRequest {
                utterance_id,
                phones: &phones,
                cues: &cues,
                attempt,
            };
            let dists = provider.distributions(&request).map_err(|message| Error::Provider {
                cues: cues.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
                message,
            })?;
            let lattice = match opts.mode {
                Seq2SeqMode::Direct => distributions_to_fst(&dists, &opts.distributions, &self.phone_syms)?,
                Seq2SeqMode::Sampled => {
                    let mut positions = Vec::with_capacity(dists.len());
                    for t in 0..dists.len() {
                        let step = dists.probabilities(t);
                        let probs: Vec<f64> = step.iter().map(|(_, p)| *p).collect();
                        let draws = sample_ranked(&probs, SEQ2SEQ_DRAWS, rng);
                        let mut position = Vec::with_capacity(draws.len());
                        for d in draws {
                            position.push((vec![self.phone_syms.label(step[d.index].0)?], d.weight));
                        }
                        positions.push(position);
                    }
                    chain_lattice(&positions, &self.phone_syms)?
                }
            };
            diagnostics.attempts += 1;
            let key = lattice.to_text();
            let found = match memo.get(&key) {
                Some(hit) => hit.clone(),
                None => {
                    let found = self.decode_lattice(&lattice, SEQ2SEQ_NBEST, true)?.into_entries();
                    memo.insert(key, found.clone());
                    found
                }
            };
            if found.is_empty() {
                diagnostics.skipped += 1;
            }
            for entry in found {
                tally.add(entry);
            }
            if tally.len() >= opts.k {
                break;
            }
        }
        let mut list = tally.into_list(opts.k, true)?;
        list.diagnostics = diagnostics;
        Ok(list)
    }

    fn phone_labels(&self, phones: &[Phone]) -> Result<Vec<u32>> {
        phones.iter().map(|p| self.phone_syms.label(p.as_str())).collect()
    }
}

/// Frequency counts of decoded strings in first-seen order.
#[derive(Default)]
struct Tally {
    entries: Vec<NBestEntry>,
    index: HashMap<Vec<String>, usize>,
}

impl Tally {
    fn add(&mut self, entry: NBestEntry) {
        match self.index.get(&entry.words) {
            Some(&i) => {
                let e = &mut self.entries[i];
                e.freq += 1;
                e.score = e.score.min(entry.score);
            }
            None => {
                self.index.insert(entry.words.clone(), self.entries.len());
                self.entries.push(NBestEntry { freq: 1, ..entry });
            }
        }
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    /// Most frequent first; ties by best score when `by_score`, then by first
    /// appearance.
    fn into_list(mut self, k: usize, by_score: bool) -> Result<NBestList> {
        self.entries.sort_by(|a, b| {
            let order = b.freq.cmp(&a.freq);
            if by_score {
                order.then_with(|| a.score.total_cmp(&b.score))
            } else {
                order
            }
        });
        self.entries.truncate(k);
        NBestList::new(self.entries, Ranking::Frequency)
    }
}

/// Independent generator for one utterance, derived from the run seed and the
/// utterance id so results do not depend on scheduling order.
pub fn utterance_rng(seed: u64, utterance_id: &str) -> ChaCha8Rng {
    // FNV-1a over the seed bytes followed by the id bytes.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(utterance_id.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(h)
}
