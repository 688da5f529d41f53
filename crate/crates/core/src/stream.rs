//! Deterministic random streams.
//!
//! Each Monte-Carlo trial owns a stream seeded from a stateless 64-bit mix of
//! `(master_seed, rate_index, trial)`, so results never depend on how trials
//! are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn avalanche(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed for trial `trial` at rate point `rate_index`.
pub fn mix(master_seed: u64, rate_index: u64, trial: u64) -> u64 {
    let a = avalanche(master_seed.wrapping_add(GOLDEN_GAMMA));
    let b = avalanche(a ^ rate_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    avalanche(b ^ trial.wrapping_add(1).wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn stream_for(master_seed: u64, rate_index: u64, trial: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(mix(master_seed, rate_index, trial))
}

pub fn stream_from_seed(seed: u64) -> RandomStream {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::HashSet;

    #[test]
    fn mix_is_stateless_and_distinct() {
        assert_eq!(mix(7, 3, 11), mix(7, 3, 11));
        let mut seen = HashSet::new();
        for r in 0..20u64 {
            for t in 0..500u64 {
                assert!(seen.insert(mix(42, r, t)));
            }
        }
        // swapping coordinates must not collide
        assert_ne!(mix(1, 2, 3), mix(1, 3, 2));
    }

    #[test]
    fn streams_reproduce() {
        let a: Vec<u64> = stream_for(5, 1, 2).random_iter().take(8).collect();
        let b: Vec<u64> = stream_for(5, 1, 2).random_iter().take(8).collect();
        assert_eq!(a, b);
        let c: Vec<u64> = stream_for(5, 1, 3).random_iter().take(8).collect();
        assert_ne!(a, c);
    }
}
