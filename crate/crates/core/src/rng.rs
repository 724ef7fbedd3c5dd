//! Reproducible random streams.
//!
//! A stream is identified by `(seed, stream_id)`. The generator is ChaCha8
//! keyed from `seed` with `stream_id` selecting one of its 2^64 independent
//! streams, so per-trial generators never share state and produce the same
//! sequence on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream_id);
        StreamRng { inner }
    }
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..bound`.
    ///
    /// Multiply-shift with rejection of the short interval, so every value
    /// has probability exactly `1/bound`.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform real in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_same_sequence() {
        let a: Vec<u64> = {
            let mut g = RngStream::new(42, 7).generator();
            (0..16).map(|_| g.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut g = RngStream::new(42, 7).generator();
            (0..16).map(|_| g.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ() {
        let mut g0 = RngStream::new(42, 0).generator();
        let mut g1 = RngStream::new(42, 1).generator();
        let mut h0 = RngStream::new(43, 0).generator();
        let x = g0.next_u64();
        assert_ne!(x, g1.next_u64());
        assert_ne!(x, h0.next_u64());
    }

    #[test]
    fn known_first_output_is_pinned() {
        // Guards cross-version drift of the generator construction.
        let mut g = RngStream::new(0, 0).generator();
        let first = g.next_u64();
        let mut again = RngStream::new(0, 0).generator();
        assert_eq!(first, again.next_u64());
        assert_eq!(first, PINNED_FIRST_OUTPUT);
    }

    const PINNED_FIRST_OUTPUT: u64 = 13_080_132_717_333_068_652;

    #[test]
    fn below_is_in_range_and_covers() {
        let mut g = RngStream::new(9, 9).generator();
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            let v = g.below(7);
            seen[v as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800), "{seen:?}");
        assert_eq!(g.below(1), 0);
    }

    #[test]
    fn below_chi_square_is_reasonable() {
        let mut g = RngStream::new(1, 2).generator();
        let bins = 10u64;
        let draws = 100_000u64;
        let mut counts = vec![0f64; bins as usize];
        for _ in 0..draws {
            counts[g.below(bins) as usize] += 1.0;
        }
        let expect = draws as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
        // 9 degrees of freedom; 99.99th percentile is about 33.7.
        assert!(chi2 < 33.7, "chi2 = {chi2}");
    }
}
