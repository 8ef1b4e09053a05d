//! Seeded, platform-independent sampling.
//!
//! All randomness in the pipeline flows through [`SplitMix64`]
//! (Steele, Lea & Flood 2014): a 64-bit state advanced by the golden-ratio
//! increment `0x9E3779B97F4A7C15` and finalized with the MurmurHash3-style
//! mixer below. Bounded draws use Lemire's multiply-shift with rejection,
//! so they are exactly uniform. Only wrapping 64/128-bit integer arithmetic
//! is involved, which makes every output identical on all platforms and
//! independent of any third-party RNG crate version.

use std::collections::HashMap;

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be non-zero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

/// Derive an independent stream seed from a user seed and a label.
///
/// The label is hashed with 64-bit FNV-1a, xored into the seed and the
/// result passed through the SplitMix64 finalizer.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix64(seed ^ h)
}

/// Draw `k` distinct indices from `0..n_items`, in draw order.
///
/// This is a sparse partial Fisher–Yates shuffle: step `i` swaps position
/// `i` with a uniform position in `i..n_items`. Memory is `O(k)`.
pub fn sample_without_replacement(n_items: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > n_items {
        return Err(Error::InsufficientItems {
            what: "sample".into(),
            required: k,
            available: n_items,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(k * 2);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = i + rng.below((n_items - i) as u64) as usize;
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        out.push(at_j);
    }
    Ok(out)
}

/// In-place Fisher–Yates shuffle driven by [`SplitMix64`].
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = SplitMix64::new(seed);
    for i in (1..items.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
