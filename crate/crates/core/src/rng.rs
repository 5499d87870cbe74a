//! Portable counter-based random number generator.
//!
//! Every randomized operation in this crate draws from [`DetRng`], a
//! splitmix64-style generator over an explicit `(key, counter)` state.
//! The generator is fully specified here so datasets can be reproduced
//! bit-exactly by other implementations:
//!
//! - `mix` is the splitmix64 finalizer.
//! - `key = mix(seed ^ 0x6A09E667F3BCC909)`.
//! - The i-th output (1-based counter) is
//!   `mix(key ^ mix(i * 0x9E3779B97F4A7C15))` with wrapping arithmetic.
//! - Derived streams use `seed = mix(master ^ mix(index ^ 0x5851F42D4C957F2D))`.
//!
//! `f64` draws take the top 53 bits; `normal()` is Box-Muller using the
//! cosine branch only (two uniforms per normal, no cached state). Bounded
//! integers use plain modulo; the bias is below `n / 2^64` and irrelevant
//! at the range sizes used here. Not cryptographically secure.


const PHI: u64 = 0x9E3779B97F4A7C15;
const SEED_SALT: u64 = 0x6A09E667F3BCC909;
const STREAM_SALT: u64 = 0x5851F42D4C957F2D;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic counter-based RNG with 128 bits of state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetRng {
    key: u64,
    counter: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix(seed ^ SEED_SALT),
            counter: 0,
        }
    }

    /// Independent stream `index` derived from a master seed.
    ///
    /// Used for per-scene parallelism: stream seeds are decorrelated by
    /// double mixing, so scenes can be generated in any order or
    /// concurrently and still reproduce bit-exactly.
    pub fn stream(master_seed: u64, index: u64) -> Self {
        Self::new(mix(master_seed ^ mix(index ^ STREAM_SALT)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key ^ mix(self.counter.wrapping_mul(PHI)))
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`; `lo == hi` returns `lo`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    #[inline]
    pub fn uniform_index(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Standard normal via Box-Muller (cosine branch).
    pub fn normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle of the first `k` positions; the prefix is a
    /// uniformly random k-subset (in random order) of the input.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], k: usize) {
        let n = items.len();
        let k = k.min(n);
        for i in 0..k {
            let j = i + self.uniform_index((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }
}
