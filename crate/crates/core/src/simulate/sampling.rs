use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::confmat::{CollapsedErrorMatrix, ConfusionRow, Cue};
use crate::corpus::Phone;

/// One sampled alternative: its index in the source row and its lattice weight
/// as a probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub index: usize,
    pub weight: f64,
}

/// Draws up to `m` distinct indices, each proportionally to `probs` among
/// those not yet drawn. Zero-probability entries are never drawn.
pub fn sample_without_replacement<R: Rng + ?Sized>(probs: &[f64], m: usize, rng: &mut R) -> Vec<usize> {
    let available = probs.iter().filter(|&&p| p > 0.0).count();
    let m = m.min(available);
    let mut drawn = Vec::with_capacity(m);
    if m == 0 {
        return drawn;
    }
    let mut dist = WeightedIndex::new(probs).expect("weights are finite and not all zero");
    while drawn.len() < m {
        let i = dist.sample(rng);
        drawn.push(i);
        if drawn.len() < m {
            dist.update_weights(&[(i, &0.0)]).expect("undrawn mass remains");
        }
    }
    drawn
}

/// Gives the i-th draw the i-th largest probability of the row, then
/// normalizes the draws to sum to one.
pub fn rank_reweight(probs: &[f64], drawn: &[usize]) -> Vec<Draw> {
    let mut ranked = probs.to_vec();
    ranked.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = ranked[..drawn.len()].iter().sum();
    drawn
        .iter()
        .zip(&ranked)
        .map(|(&index, &p)| Draw { index, weight: p / total })
        .collect()
}

/// Samples `m` alternatives from a row without replacement and reweights them
/// by rank. A row with one alternative yields it alone with weight 1.
pub fn sample_ranked<R: Rng + ?Sized>(probs: &[f64], m: usize, rng: &mut R) -> Vec<Draw> {
    let drawn = sample_without_replacement(probs, m, rng);
    rank_reweight(probs, &drawn)
}

/// Two alternatives from a confusion row: the first draw is weighted with the
/// row's top probability and the second with its runner-up, then normalized.
pub fn sample_alternatives<R: Rng + ?Sized>(row: &ConfusionRow, rng: &mut R) -> Vec<Draw> {
    let probs: Vec<f64> = row.alternatives().iter().map(|a| a.prob).collect();
    sample_ranked(&probs, 2, rng)
}

/// One independent cue per phone, drawn from its collapsed row.
pub fn sample_cues<R: Rng + ?Sized>(collapsed: &CollapsedErrorMatrix, phones: &[Phone], rng: &mut R) -> Vec<Cue> {
    phones
        .iter()
        .map(|p| {
            let row = collapsed.row_or_identity(p);
            let i = WeightedIndex::new(row).expect("collapsed rows are distributions").sample(rng);
            Cue::ALL[i]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::confmat::ConfusionMatrix;
    use crate::corpus::phones;

    fn row() -> ConfusionRow {
        let cm = ConfusionMatrix::from_probabilities([(
            Phone::from("s"),
            vec![(phones("s"), 0.9), (phones("z"), 0.07), (phones("th"), 0.03)],
        )])
        .unwrap();
        cm.row(&Phone::from("s")).unwrap().clone()
    }

    #[test]
    fn reweighting_fixture() {
        // draws (z, th) take the weights of ranks 1 and 2
        let probs = [0.9, 0.07, 0.03];
        let w = rank_reweight(&probs, &[1, 2]);
        assert!((w[0].weight - 0.9 / 0.97).abs() < 1e-12);
        assert!((w[1].weight - 0.07 / 0.97).abs() < 1e-12);
        assert!((w[0].weight - 0.9278).abs() < 1e-4 && (w[1].weight - 0.0722).abs() < 1e-4);
    }

    #[test]
    fn single_alternative_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = ConfusionRow::identity(&Phone::from("x"));
        assert_eq!(sample_alternatives(&r, &mut rng), vec![Draw { index: 0, weight: 1.0 }]);
    }

    #[test]
    fn draws_are_distinct_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = row();
        for _ in 0..1000 {
            let d = sample_alternatives(&r, &mut rng);
            assert_eq!(d.len(), 2);
            assert_ne!(d[0].index, d[1].index);
            assert!((d[0].weight + d[1].weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_is_never_drawn() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = sample_without_replacement(&[0.0, 0.5, 0.0, 0.5], 3, &mut rng);
            assert_eq!(d.len(), 2);
            assert!(d.iter().all(|&i| i == 1 || i == 3));
        }
        assert!(sample_without_replacement(&[0.0, 0.0], 2, &mut rng).is_empty());
    }

    #[test]
    fn second_draw_follows_the_remaining_mass() {
        // Given first draw s (index 0), the second is z with prob 0.07 / 0.10.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let probs = [0.9, 0.07, 0.03];
        let (mut after_s, mut z_after_s) = (0u32, 0u32);
        for _ in 0..50_000 {
            let d = sample_without_replacement(&probs, 2, &mut rng);
            if d[0] == 0 {
                after_s += 1;
                z_after_s += u32::from(d[1] == 1);
            }
        }
        let p = 0.7;
        let n = after_s as f64;
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((z_after_s as f64 / n - p).abs() < 4.0 * se);
    }

    #[test]
    fn cues_follow_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = CollapsedErrorMatrix::default();
        m.insert(Phone::from("t"), [1.0, 0.0, 0.0, 0.0, 0.0]);
        let seq = phones("t t aa t");
        let cues = sample_cues(&m, &seq, &mut rng);
        assert_eq!(cues.len(), 4);
        assert!(cues.iter().all(|&c| c == Cue::NoError));
    }
}
