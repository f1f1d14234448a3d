//! Direct versus sampled decoding on the synthetic channel.
//!
//! Usage: `cargo run --release -p errsim-core --example synthetic_channel [seed] [iterations]`

use std::collections::HashMap;
use std::time::Instant;

use errsim_core::corpus::PronunciationPolicy;
use errsim_core::eval::{evaluate, ChunkMatching};
use errsim_core::simulate::utterance_rng;
use errsim_core::synthetic::{SyntheticConfig, SyntheticWorld};

fn main() -> errsim_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed is an integer"));
    let iterations: usize = args.next().map_or(1000, |s| s.parse().expect("iterations is an integer"));

    let world = SyntheticWorld::generate(&SyntheticConfig { seed, ..SyntheticConfig::default() })?;
    let items = world.corpus.items();
    let errorful = items.iter().filter(|i| i.gold != i.hyp).count();
    println!("{} sentences, {errorful} misrecognized", items.len());

    let cm = world.train_confusion(400)?;
    let sim = &world.simulator;
    let channel = sim.confusion_fst(&cm)?;
    let test = &items[400..];

    let start = Instant::now();
    let mut direct = HashMap::new();
    for item in test {
        direct.insert(item.id.clone(), sim.direct_decode(&item.gold, &channel, 100)?);
    }
    let direct_time = start.elapsed();

    let start = Instant::now();
    let mut sampled = HashMap::new();
    for item in test {
        let mut rng = utterance_rng(seed, &item.id);
        let list = sim.sampled_decode(&item.gold, &cm, iterations, 100, PronunciationPolicy::First, &mut rng)?;
        sampled.insert(item.id.clone(), list);
    }
    let sampled_time = start.elapsed();

    for (name, predictions, time) in [("direct", &direct, direct_time), ("sampled", &sampled, sampled_time)] {
        let report = evaluate(test, predictions, 100, ChunkMatching::Anchored);
        let mean_len = predictions.values().map(|l| l.len()).sum::<usize>() as f64 / predictions.len() as f64;
        println!(
            "{name:8} chunk recall {:5.1}%  utterance recall {:5.1}%  ({} chunks, {mean_len:.1} alternatives each, {time:.1?})",
            report.chunk_recall, report.utterance_recall, report.counts.chunks
        );
    }
    Ok(())
}
