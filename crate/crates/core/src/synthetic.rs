//! A toy world with a known noisy channel, for end-to-end experiments.
//!
//! Words come in families whose members differ from a base word in one phone,
//! swapped for a phone the channel tends to confuse it with. The recognizer
//! imitates a posterior-based acoustic model: for each spoken phone it hears
//! one channel output and puts most of its confidence there, leaving the rest
//! of the channel row as weak competitors. That lattice is decoded with the
//! lexicon and a bigram LM trained on every sentence.

use std::collections::HashSet;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::{phone_distance, PhoneAligner};
use crate::confmat::{ConfusionMatrix, EstimationOptions};
use crate::corpus::{words_to_phones, Lexicon, ParallelCorpus, ParallelItem, Phone, PhoneInventory, PronunciationPolicy};
use crate::error::{Error, Result};
use crate::simulate::{chain_lattice, DecoderOptions, Simulator};
use crate::wfst::{ArpaModel, Label, SymbolTable, WeightedFst};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Lexicon size.
    pub words: usize,
    pub sentences: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Channel probability of reproducing a phone unchanged.
    pub identity_mass: f64,
    /// Channel probability of dropping a phone.
    pub deletion_mass: f64,
    /// Phones each channel row may turn a phone into.
    pub channel_neighbours: usize,
    /// Words per family of one-phone variants.
    pub family_size: usize,
    /// Recognizer posterior on the phone it heard.
    pub confidence: f64,
    /// Successors each word allows in the sentence generator.
    pub fan_out: usize,
    /// Absolute discount of the bigram LM.
    pub lm_discount: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            words: 150,
            sentences: 500,
            min_words: 4,
            max_words: 8,
            identity_mass: 0.85,
            deletion_mass: 0.02,
            channel_neighbours: 4,
            family_size: 4,
            confidence: 0.97,
            fan_out: 40,
            lm_discount: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub inventory: PhoneInventory,
    pub lexicon: Lexicon,
    /// Ground-truth phone channel used by the recognizer.
    pub channel: ConfusionMatrix,
    pub lm: ArpaModel,
    /// Gold sentences paired with recognizer output, ids `s0000`, `s0001`, ...
    pub corpus: ParallelCorpus,
    pub simulator: Simulator,
}

impl SyntheticWorld {
    pub fn generate(config: &SyntheticConfig) -> Result<Self> {
        let mass = config.identity_mass + config.deletion_mass;
        if !(config.identity_mass > 0.0 && config.deletion_mass >= 0.0 && mass <= 1.0) {
            return Err(Error::Contract(format!("channel masses must be a distribution, got identity {} deletion {}", config.identity_mass, config.deletion_mass)));
        }
        if mass < 1.0 && config.channel_neighbours == 0 {
            return Err(Error::Contract("leftover channel mass needs neighbours".into()));
        }
        if !(config.confidence > 0.0 && config.confidence < 1.0) || config.min_words == 0 || config.min_words > config.max_words {
            return Err(Error::Contract("confidence must lie in (0, 1) and sentence lengths must be ordered".into()));
        }
        let inventory = PhoneInventory::arpabet();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let neighbours = nearest_neighbours(&inventory)?;
        let channel = peaky_channel(&neighbours, config)?;
        let (lexicon, words) = family_lexicon(&inventory, &neighbours, config, &mut rng)?;
        let sentences = markov_sentences(&words, config, &mut rng);
        let lm = ArpaModel::estimate(&sentences, &words, config.lm_discount)?;
        let simulator = Simulator::new(&inventory, lexicon.clone(), &lm, &DecoderOptions::default())?;
        let mut items = Vec::with_capacity(sentences.len());
        for (i, gold) in sentences.into_iter().enumerate() {
            let clean = words_to_phones(&gold, &lexicon, PronunciationPolicy::First)?;
            let lattice = posterior_lattice(&clean, &channel, config.confidence, simulator.phone_syms(), &mut rng)?;
            let best = simulator.decode_lattice(&lattice, 1, false)?;
            let hyp = best.into_entries().into_iter().next().map_or_else(|| gold.clone(), |e| e.words);
            items.push(ParallelItem { id: format!("s{i:04}"), gold, hyp });
        }
        Ok(SyntheticWorld {
            inventory,
            lexicon,
            channel,
            lm,
            corpus: ParallelCorpus::new(items)?,
            simulator,
        })
    }

    /// Estimates a confusion matrix from the first `train` sentences by
    /// aligning gold and recognized pronunciations.
    pub fn train_confusion(&self, train: usize) -> Result<ConfusionMatrix> {
        let aligner = PhoneAligner::new(&self.inventory);
        let alignments = self.corpus.items()[..train]
            .iter()
            .map(|item| {
                let gold = words_to_phones(&item.gold, &self.lexicon, PronunciationPolicy::First)?;
                let hyp = words_to_phones(&item.hyp, &self.lexicon, PronunciationPolicy::First)?;
                aligner.align(&gold, &hyp)
            })
            .collect::<Result<Vec<_>>>()?;
        ConfusionMatrix::estimate(&alignments, &self.inventory, EstimationOptions::default())
    }
}

/// Every phone's other phones ordered by feature distance, ties by inventory
/// order.
fn nearest_neighbours(inventory: &PhoneInventory) -> Result<Vec<(Phone, Vec<Phone>)>> {
    inventory
        .phones()
        .iter()
        .map(|p| {
            let mut others = Vec::new();
            for q in inventory.phones() {
                if q != p {
                    others.push((phone_distance(inventory, p, q)?, q.clone()));
                }
            }
            others.sort_by(|a, b| a.0.total_cmp(&b.0));
            Ok((p.clone(), others.into_iter().map(|(_, q)| q).collect()))
        })
        .collect()
}

/// Identity with `identity_mass`, an optional deletion, and the rest spread
/// over the nearest phones with halving weights.
fn peaky_channel(neighbours: &[(Phone, Vec<Phone>)], config: &SyntheticConfig) -> Result<ConfusionMatrix> {
    let rest = 1.0 - config.identity_mass - config.deletion_mass;
    let shares: Vec<f64> = (0..config.channel_neighbours).map(|i| 0.5f64.powi(i as i32)).collect();
    let total: f64 = shares.iter().sum();
    let rows = neighbours.iter().map(|(p, near)| {
        let mut row = vec![(vec![p.clone()], config.identity_mass)];
        if config.deletion_mass > 0.0 {
            row.push((Vec::new(), config.deletion_mass));
        }
        if rest > 0.0 {
            row.extend(near.iter().zip(&shares).map(|(q, s)| (vec![q.clone()], rest * s / total)));
        }
        (p.clone(), row)
    });
    ConfusionMatrix::from_probabilities(rows)
}

fn spelling(pron: &[Phone]) -> String {
    pron.iter().map(|p| p.as_str().to_lowercase()).collect()
}

/// Families of pronunciations that each differ from a base word in one phone,
/// swapped for one of that phone's nearest neighbours.
fn family_lexicon<R: Rng>(
    inventory: &PhoneInventory,
    neighbours: &[(Phone, Vec<Phone>)],
    config: &SyntheticConfig,
    rng: &mut R,
) -> Result<(Lexicon, Vec<String>)> {
    let phones = inventory.phones();
    let mut lexicon = Lexicon::new();
    let mut words = Vec::with_capacity(config.words);
    let mut used = HashSet::new();
    while words.len() < config.words {
        let len = rng.gen_range(2..=4);
        let base: Vec<Phone> = (0..len).map(|_| phones.choose(rng).expect("inventory is not empty").clone()).collect();
        let mut family = vec![base.clone()];
        for _ in 1..config.family_size.min(config.words - words.len()) {
            let at = rng.gen_range(0..len);
            let near = &neighbours.iter().find(|(p, _)| *p == base[at]).expect("every phone has neighbours").1;
            let mut variant = base.clone();
            variant[at] = near[rng.gen_range(0..config.channel_neighbours.max(1))].clone();
            family.push(variant);
        }
        let spelled: Vec<String> = family.iter().map(|p| spelling(p)).collect();
        let distinct: HashSet<&String> = spelled.iter().collect();
        if distinct.len() < family.len() || spelled.iter().any(|w| used.contains(w)) {
            continue;
        }
        for (word, pron) in spelled.into_iter().zip(family) {
            lexicon.insert(&word, pron, inventory)?;
            used.insert(word.clone());
            words.push(word);
        }
    }
    Ok((lexicon, words))
}

/// Sentences from a first-order chain where each word has a few weighted
/// successors.
fn markov_sentences<R: Rng>(words: &[String], config: &SyntheticConfig, rng: &mut R) -> Vec<Vec<String>> {
    let successors: Vec<(Vec<usize>, WeightedIndex<f64>)> = (0..words.len())
        .map(|_| {
            let next: Vec<usize> = (0..config.fan_out).map(|_| rng.gen_range(0..words.len())).collect();
            let weights: Vec<f64> = (0..config.fan_out).map(|_| rng.gen_range(0.1..1.0)).collect();
            (next, WeightedIndex::new(weights).expect("positive weights"))
        })
        .collect();
    (0..config.sentences)
        .map(|_| {
            let len = rng.gen_range(config.min_words..=config.max_words);
            let mut w = rng.gen_range(0..words.len());
            let mut sentence = vec![words[w].clone()];
            while sentence.len() < len {
                let (next, dist) = &successors[w];
                w = next[dist.sample(rng)];
                sentence.push(words[w].clone());
            }
            sentence
        })
        .collect()
}

/// A peaky posterior per spoken phone: one output heard through the channel
/// takes `confidence`, and the rest of the channel row shares the remainder in
/// proportion to its probabilities, so the spoken phone stays reachable.
pub fn posterior_lattice<R: Rng + ?Sized>(
    spoken: &[Phone],
    channel: &ConfusionMatrix,
    confidence: f64,
    syms: &Arc<SymbolTable>,
    rng: &mut R,
) -> Result<WeightedFst> {
    let mut positions = Vec::with_capacity(spoken.len());
    for p in spoken {
        let row = channel.row_or_identity(p);
        let alts = row.alternatives();
        let heard = WeightedIndex::new(alts.iter().map(|a| a.prob))
            .expect("rows are distributions")
            .sample(rng);
        let others = 1.0 - alts[heard].prob;
        let mut position = Vec::with_capacity(alts.len());
        for (i, a) in alts.iter().enumerate() {
            let weight = if alts.len() == 1 {
                1.0
            } else if i == heard {
                confidence
            } else {
                (1.0 - confidence) * a.prob / others
            };
            let labels = a.output.iter().map(|q| syms.label(q.as_str())).collect::<Result<Vec<Label>>>()?;
            position.push((labels, weight));
        }
        positions.push(position);
    }
    chain_lattice(&positions, syms)
}

/// Passes each phone through its channel row.
pub fn corrupt<R: Rng + ?Sized>(phones: &[Phone], channel: &ConfusionMatrix, rng: &mut R) -> Vec<Phone> {
    let mut out = Vec::with_capacity(phones.len());
    for p in phones {
        let row = channel.row_or_identity(p);
        let alts = row.alternatives();
        let i = WeightedIndex::new(alts.iter().map(|a| a.prob))
            .expect("rows are distributions")
            .sample(rng);
        out.extend(alts[i].output.iter().cloned());
    }
    out
}
