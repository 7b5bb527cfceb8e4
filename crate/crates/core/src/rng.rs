//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a [`RandomStream`] obtained by
//! [`RandomStream::derive`]`(master_seed, key)`. The key is a short tuple of
//! integers naming the unit of work (trial, row, site block, ...). Streams
//! are ChaCha8 keystreams: the master seed selects the key, the mixed work key
//! selects the 64-bit stream id, and output is a pure function of
//! `(seed, stream, counter)`. Results are therefore independent of how work
//! is split between threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams of different subsystems apart.
pub mod tag {
    pub const WINDOW_ROW: u64 = 1;
    pub const WINDOW_SHELL: u64 = 2;
    pub const SOURCE_ROW: u64 = 3;
    pub const RESTRICTED: u64 = 4;
    pub const COUPLING: u64 = 5;
    pub const TRIAL: u64 = 6;
    pub const CAPACITY_MC: u64 = 7;
    pub const BLOCK: u64 = 8;
    pub const PATH_OPEN: u64 = 9;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a work key into a 64-bit stream id.
pub fn stream_id(key: &[u64]) -> u64 {
    key.iter()
        .fold(0x5EED_F00D_u64 ^ key.len() as u64, |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn derive(master_seed: u64, key: &[u64]) -> Self {
        let mut seed = [0u8; 32];
        let mut z = master_seed;
        for chunk in seed.chunks_exact_mut(8) {
            z = splitmix64(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(seed);
        inner.set_stream(stream_id(key));
        RandomStream { inner }
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `(0, 1]`, safe to take logarithms of.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
