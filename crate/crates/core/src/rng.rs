//! Seeded generators and seed derivation.
//!
//! Every random stream in a run is derived from one master seed with
//! [`split`], so that changing a replication index or a stream tag yields an
//! unrelated stream while fixing both reproduces it exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

/// Generator used for every simulation stream.
pub type SimRng = ChaCha8Rng;

/// Stream tags for [`split`].
pub mod stream {
    pub const GRAPH: u64 = 1;
    pub const OBJECTIVE: u64 = 2;
    pub const SWARM: u64 = 3;
    pub const CENTRAL: u64 = 4;
    pub const VALIDATION: u64 = 5;
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed: `mix64(seed + (index + 1) * 0x9e3779b97f4a7c15)`.
pub fn split(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Exponential draw with the given mean. `mean` must be positive and finite.
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    Exp::new(1.0 / mean)
        .expect("exponential mean must be positive")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_separates_indices_and_streams() {
        let a = split(42, 0);
        assert_ne!(a, split(42, 1));
        assert_ne!(a, split(43, 0));
        assert_eq!(a, split(42, 0));
    }

    #[test]
    fn exponential_mean() {
        let mut rng = seeded(7);
        let n = 200_000;
        let mean = (0..n).map(|_| exponential(&mut rng, 0.5)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }
}
