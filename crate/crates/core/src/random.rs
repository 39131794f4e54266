//! Seeded generators for test and self-check inputs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{Chain, Flavor, PermChain};
use crate::matrix::{DoublyStochMatrix, Permutation, StochMatrix};
use crate::Settings;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn permutation<R: Rng>(rng: &mut R, m: usize) -> Permutation {
    let mut map: Vec<usize> = (0..m).collect();
    map.shuffle(rng);
    Permutation::from_map_unchecked(map)
}

/// A convex combination of `terms` random permutation matrices with random
/// positive weights.
pub fn doubly_stochastic_with_terms<R: Rng>(rng: &mut R, m: usize, terms: usize) -> DoublyStochMatrix {
    let weights: Vec<f64> = (0..terms.max(1)).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut data = vec![0.0; m * m];
    for w in weights {
        let p = permutation(rng, m);
        for (i, &j) in p.map().iter().enumerate() {
            data[i * m + j] += w / total;
        }
    }
    let base = StochMatrix::from_vec(m, data, 1e-9).expect("convex combination is stochastic");
    DoublyStochMatrix::new(base, 1e-9).expect("convex combination is doubly stochastic")
}

/// A doubly stochastic matrix built from between 1 and `m^2` permutations.
pub fn doubly_stochastic<R: Rng>(rng: &mut R, m: usize) -> DoublyStochMatrix {
    let terms = rng.gen_range(1..=m * m);
    doubly_stochastic_with_terms(rng, m, terms)
}

/// A row-stochastic matrix whose rows have random supports of density
/// roughly `density`, each row keeping at least one entry.
pub fn stochastic<R: Rng>(rng: &mut R, m: usize, density: f64) -> StochMatrix {
    let mut data = vec![0.0; m * m];
    for row in data.chunks_mut(m) {
        let forced = rng.gen_range(0..m);
        for (j, cell) in row.iter_mut().enumerate() {
            if j == forced || rng.gen_bool(density.clamp(0.0, 1.0)) {
                *cell = rng.gen_range(0.05..1.0);
            }
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
    StochMatrix::from_vec(m, data, 1e-9).expect("normalized rows")
}

/// A chain with a prefix of `0..=max_prefix` and a cycle of
/// `1..=max_cycle` matrices.
pub fn chain<R: Rng>(
    rng: &mut R,
    m: usize,
    max_prefix: usize,
    max_cycle: usize,
    flavor: Flavor,
) -> Chain {
    let prefix_len = rng.gen_range(0..=max_prefix);
    let cycle_len = rng.gen_range(1..=max_cycle.max(1));
    let prefix = draw_matrices(rng, m, prefix_len, flavor);
    let cycle = draw_matrices(rng, m, cycle_len, flavor);
    Chain::new(prefix, cycle, flavor, &Settings::default()).expect("generated chain is valid")
}

fn draw_matrices<R: Rng>(rng: &mut R, m: usize, n: usize, flavor: Flavor) -> Vec<StochMatrix> {
    (0..n)
        .map(|_| match flavor {
            Flavor::DoublyStochastic => {
                let terms = rng.gen_range(1..=m);
                doubly_stochastic_with_terms(rng, m, terms).into_inner()
            }
            Flavor::Stochastic => {
                let density = rng.gen_range(0.1..0.9);
                stochastic(rng, m, density)
            }
        })
        .collect()
}

pub fn perm_chain<R: Rng>(rng: &mut R, m: usize, max_prefix: usize, max_cycle: usize) -> PermChain {
    let prefix_len = rng.gen_range(0..=max_prefix);
    let cycle_len = rng.gen_range(1..=max_cycle.max(1));
    let prefix = (0..prefix_len).map(|_| permutation(rng, m)).collect();
    let cycle = (0..cycle_len).map(|_| permutation(rng, m)).collect();
    PermChain::new(prefix, cycle).expect("generated permutation chain is valid")
}

/// A random real vector with entries in `[-1, 1)`.
pub fn vector<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
