//! Uniformity of the gate samplers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sre_spread::clifford::{full_group, sample_uniform, RestrictedDraw, FULL_GROUP_ORDER};
use std::collections::HashMap;

/// χ²_{0.999} with 11519 degrees of freedom.
const CHI2_FULL: f64 = 11993.749;
/// χ²_{0.999} with 31 degrees of freedom.
const CHI2_RESTRICTED: f64 = 61.098;

fn chi2(counts: &[u64], draws: u64) -> f64 {
    let e = draws as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

#[test]
fn full_group_draws_are_uniform() {
    let index: HashMap<[u8; 4], usize> =
        full_group().gates.iter().enumerate().map(|(k, g)| (g.key(), k)).collect();
    assert_eq!(index.len(), FULL_GROUP_ORDER);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 10_000_000u64;
    let mut counts = vec![0u64; FULL_GROUP_ORDER];
    for _ in 0..draws {
        counts[index[&sample_uniform(&mut rng).key()]] += 1;
    }
    let stat = chi2(&counts, draws);
    assert!(stat < CHI2_FULL, "chi2 = {stat}");
}

#[test]
fn restricted_tuples_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let draws = 3_200_000u64;
    let mut counts = vec![0u64; RestrictedDraw::COUNT];
    for _ in 0..draws {
        counts[RestrictedDraw::sample(&mut rng).index()] += 1;
    }
    let stat = chi2(&counts, draws);
    assert!(stat < CHI2_RESTRICTED, "chi2 = {stat}");
}
