//! Hierarchical, schedule-independent random streams.
//!
//! A stream is identified by a master seed plus a path of integers
//! (replicate, role, model index, ...). The generator state is derived from
//! that identity alone, so a replicate produces the same numbers whether it
//! runs first, last, or on another thread.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream roles used by the engine when deriving substreams.
pub mod role {
    pub const BOOTSTRAP: u64 = 1;
    pub const SIMULATE: u64 = 2;
    pub const SCORE: u64 = 3;
    pub const OBSERVED: u64 = 4;
    pub const WILLIAMS: u64 = 5;
    pub const CLASSIFIER: u64 = 6;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<u64>,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self::at(master_seed, Vec::new())
    }

    fn at(master_seed: u64, path: Vec<u64>) -> Self {
        let mut h = splitmix(master_seed);
        for (depth, &p) in path.iter().enumerate() {
            h = splitmix(h ^ splitmix(p.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 1))));
        }
        // Path length is folded in so [a] and [a, 0] differ.
        h = splitmix(h ^ (path.len() as u64));
        let mut seed = [0u8; 32];
        for (k, chunk) in seed.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix(h.wrapping_add(k as u64)).to_le_bytes());
        }
        Self {
            master_seed,
            path,
            rng: ChaCha12Rng::from_seed(seed),
        }
    }

    /// Fresh substream at `self.path ++ path`. Does not consume from `self`.
    pub fn derive(&self, path: &[u64]) -> Self {
        let mut full = self.path.clone();
        full.extend_from_slice(path);
        Self::at(self.master_seed, full)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_identity_same_numbers() {
        let mut a = RngStream::new(7).derive(&[1, 2, 3]);
        let mut b = RngStream::new(7).derive(&[1]).derive(&[2, 3]);
        let xa: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn distinct_paths_differ() {
        let root = RngStream::new(7);
        let firsts: Vec<u64> = [vec![0], vec![1], vec![0, 0], vec![1, 0], vec![0, 1]]
            .iter()
            .map(|p| root.derive(p).next_u64())
            .collect();
        for i in 0..firsts.len() {
            for j in i + 1..firsts.len() {
                assert_ne!(firsts[i], firsts[j]);
            }
        }
        assert_ne!(RngStream::new(1).next_u64(), RngStream::new(2).next_u64());
    }

    #[test]
    fn sibling_streams_are_uncorrelated() {
        let root = RngStream::new(99);
        let n = 20_000;
        let mut a = root.derive(&[5]);
        let mut b = root.derive(&[6]);
        let (mut sab, mut sa, mut sb, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x: f64 = a.random();
            let y: f64 = b.random();
            sab += x * y;
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - sa / nf * sb / nf;
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        // 5 standard errors of a null correlation.
        assert!(corr.abs() < 5.0 / nf.sqrt(), "corr = {corr}");
    }
}
