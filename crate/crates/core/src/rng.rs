//! Deterministic, splittable random-number streams.
//!
//! A stream is identified by a root seed and a path of 32-bit indices. The
//! key of the underlying ChaCha8 generator is a SplitMix64 hash of that
//! identity, so deriving a substream costs O(path length) and never touches
//! the parent's state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn key_for(root_seed: u64, path: &[u32]) -> [u8; 32] {
    let mut h = root_seed;
    let mut acc = splitmix64(&mut h);
    for (depth, &idx) in path.iter().enumerate() {
        // Mix depth in as well so [0, 1] and [1] ... cannot collide by shifting.
        h ^= acc ^ ((idx as u64) << 32 | depth as u64);
        acc = splitmix64(&mut h);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut h).to_le_bytes());
    }
    key
}

/// A seeded random stream addressed by `(root_seed, path)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    path: Vec<u32>,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(root_seed: u64) -> Self {
        Self::at(root_seed, Vec::new())
    }

    fn at(root_seed: u64, path: Vec<u32>) -> Self {
        let inner = ChaCha8Rng::from_seed(key_for(root_seed, &path));
        Self {
            root_seed,
            path,
            inner,
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    /// The stream at `self.path ++ [index]`, freshly positioned.
    pub fn derive(&self, index: u32) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self::at(self.root_seed, path)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`, safe to pass to `ln`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-64 * n and irrelevant here.
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

/// Free-function form of [`RngStream::derive`].
pub fn derive_substream(parent: &RngStream, index: u32) -> RngStream {
    parent.derive(index)
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(s: &mut RngStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| s.uniform()).collect()
    }

    #[test]
    fn identical_paths_identical_draws() {
        let root = RngStream::new(7);
        let mut a = derive_substream(&root, 0);
        let mut b = derive_substream(&root, 0);
        assert_eq!(draws(&mut a, 100), draws(&mut b, 100));
    }

    #[test]
    fn derive_ignores_parent_position() {
        let mut root = RngStream::new(7);
        let before = root.derive(3);
        draws(&mut root, 10);
        let after = root.derive(3);
        assert_eq!(draws(&mut before.clone(), 5), draws(&mut after.clone(), 5));
    }

    #[test]
    fn nested_path_concatenates() {
        let root = RngStream::new(1);
        let s = derive_substream(&derive_substream(&root, 0), 1);
        assert_eq!(s.path(), &[0, 1]);
        assert_eq!(s.root_seed(), 1);
    }

    #[test]
    fn sibling_streams_uncorrelated() {
        let root = RngStream::new(2024);
        let x = draws(&mut root.derive(0), 10_000);
        let y = draws(&mut root.derive(1), 10_000);
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(&y) {
            sxy += (a - mx) * (b - my);
            sxx += (a - mx) * (a - mx);
            syy += (b - my) * (b - my);
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!(r.abs() < 0.05, "r = {r}");
    }

    #[test]
    fn path_shift_does_not_collide() {
        let root = RngStream::new(5);
        let a = draws(&mut root.derive(0).derive(1), 4);
        let b = draws(&mut root.derive(1), 4);
        assert_ne!(a, b);
    }

    #[test]
    fn below_stays_in_range() {
        let mut s = RngStream::new(9);
        for n in 1..50 {
            for _ in 0..100 {
                assert!(s.below(n) < n);
            }
        }
    }
}
