#![allow(dead_code)]

use chainmon::{ItemDistribution, TransitionMatrix};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stochastic rows with out-degrees in `1..=max_degree`.
pub fn random_chain(rng: &mut impl Rng, n: usize, max_degree: usize) -> TransitionMatrix {
    let rows = (0..n)
        .map(|_| {
            let d = rng.random_range(1..=max_degree.min(n));
            let targets = sample(rng, n, d).into_vec();
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            targets
                .into_iter()
                .zip(w)
                .map(|(v, w)| (v, w / total))
                .collect()
        })
        .collect();
    TransitionMatrix::from_rows(rows).unwrap()
}

/// Random uniform-probability chain over a random digraph.
pub fn random_uniform_chain(rng: &mut impl Rng, n: usize, max_degree: usize) -> TransitionMatrix {
    let adjacency = (0..n)
        .map(|_| {
            let d = rng.random_range(0..=max_degree.min(n));
            sample(rng, n, d).into_vec()
        })
        .collect();
    TransitionMatrix::uniform(adjacency).unwrap()
}

/// Integer item counts in `0..=max`, at least one positive.
pub fn random_counts(rng: &mut impl Rng, n: usize, max: u64) -> Vec<u64> {
    let mut x: Vec<u64> = (0..n).map(|_| rng.random_range(0..=max)).collect();
    if x.iter().all(|&c| c == 0) {
        x[rng.random_range(0..n)] = 1;
    }
    x
}

pub fn items(counts: &[u64]) -> ItemDistribution {
    ItemDistribution::new(counts.iter().map(|&c| c as f64).collect()).unwrap()
}

/// Real-valued masses, zero with probability one half.
pub fn random_masses(rng: &mut impl Rng, n: usize) -> ItemDistribution {
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(0.0..10.0)
            } else {
                0.0
            }
        })
        .collect();
    if x.iter().all(|&v| v == 0.0) {
        x[0] = 1.0;
    }
    ItemDistribution::new(x).unwrap()
}

/// All subsets of `0..n` with at most `max` elements, in size order.
pub fn small_subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (0..=max.min(n))
        .flat_map(|k| itertools::Itertools::combinations(0..n, k))
        .collect()
}
