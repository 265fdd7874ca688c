//! Seeded randomness.
//!
//! All randomness comes from ChaCha8 streams. Independent streams for
//! different subtrees are derived by folding the subtree's root path into the
//! base seed with SplitMix64, so probing the same subtree with the same seed
//! gives the same result regardless of which thread does it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interval::Side;

/// Name of the generator, reported in config dumps.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), streams split by SplitMix64(seed, path)";

pub type TreeRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the stream that belongs to the subtree at `path`.
pub fn stream_seed(seed: u64, path: &[Side]) -> u64 {
    let mut h = splitmix64(seed ^ 0x7472_6565_6261_6C61);
    for chunk in path.chunks(64) {
        let mut word = 0u64;
        for side in chunk {
            word = (word << 1) | u64::from(*side == Side::Right);
        }
        h = splitmix64(h ^ word);
    }
    splitmix64(h ^ path.len() as u64)
}

pub fn stream_rng(seed: u64, path: &[Side]) -> TreeRng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, path))
}

pub fn seeded(seed: u64) -> TreeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fair coin that spends one bit of generator output per flip.
pub struct Coin<R> {
    rng: R,
    bits: u64,
    remaining: u32,
}

impl<R: RngCore> Coin<R> {
    pub fn new(rng: R) -> Self {
        Coin {
            rng,
            bits: 0,
            remaining: 0,
        }
    }

    pub fn flip(&mut self) -> Side {
        if self.remaining == 0 {
            self.bits = self.rng.next_u64();
            self.remaining = 64;
        }
        let bit = self.bits & 1;
        self.bits >>= 1;
        self.remaining -= 1;
        if bit == 0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_by_path() {
        let a = stream_seed(42, &[Side::Left]);
        let b = stream_seed(42, &[Side::Right]);
        let c = stream_seed(42, &[]);
        let d = stream_seed(42, &[Side::Left, Side::Left]);
        assert!(a != b && a != c && b != c && a != d);
        assert_eq!(a, stream_seed(42, &[Side::Left]));
        assert_ne!(a, stream_seed(43, &[Side::Left]));
    }

    #[test]
    fn coin_is_roughly_fair() {
        let mut coin = Coin::new(seeded(7));
        let rights = (0..100_000).filter(|_| coin.flip() == Side::Right).count();
        assert!((49_000..51_000).contains(&rights), "{rights}");
    }
}
