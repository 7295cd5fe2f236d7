//! Deterministic per-replicate random streams.
//!
//! Every replicate gets its own `ChaCha8Rng` whose seed is a fixed 64-bit mix
//! of `(master_seed, replicate_index)`. Results are collected in replicate
//! order, so output never depends on how many workers ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn replicate_rng(master: u64, index: u64) -> Rng {
    rng_from_seed(replicate_seed(master, index))
}

/// Runs `f(index, rng)` for every replicate in parallel and returns the
/// results in index order.
pub fn par_replicates<T, F>(master: u64, reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut Rng) -> T + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(master, i);
            f(i, &mut rng)
        })
        .collect()
}

/// Fallible variant of [`par_replicates`]; the first failing replicate (by
/// index) is reported.
pub fn try_par_replicates<T, F>(master: u64, reps: u64, f: F) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut Rng) -> crate::Result<T> + Sync + Send,
{
    let out: Vec<crate::Result<T>> = par_replicates(master, reps, f);
    out.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| crate::Error::Replicate {
                index: i as u64,
                source: Box::new(e),
            })
        })
        .collect()
}
