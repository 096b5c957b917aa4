//! Seed-derived random streams and the samplers built on them.
//!
//! Every source of randomness in a run is a ChaCha12 stream derived from
//! the scenario seed, a domain tag and an index. Streams never interleave,
//! so adding nodes or changing the workload cannot perturb an unrelated
//! stream. All float sampling is implemented here rather than borrowed
//! from a distributions crate, which pins the exact bit-level behaviour.

use alloc::vec::Vec;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream domains. The numeric tags are part of the determinism contract.
#[derive(Clone, Copy, Debug)]
pub enum StreamDomain {
    Placement,
    Catalog,
    Workload,
    NodeMobility,
    ArrivalPlacement,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Placement => 1,
            StreamDomain::Catalog => 2,
            StreamDomain::Workload => 3,
            StreamDomain::NodeMobility => 4,
            StreamDomain::ArrivalPlacement => 5,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha12 stream from (seed, domain, index).
pub fn derive_stream(seed: u64, domain: StreamDomain, index: u64) -> ChaCha12Rng {
    let mut state = seed
        ^ domain.tag().wrapping_mul(0xa076_1d64_78bd_642f)
        ^ index.wrapping_mul(0xe703_7ed1_a0b4_28db);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Uniform float in [0, 1) with 53 bits of precision.
pub fn u01(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform float in [lo, hi).
pub fn uniform_f64(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + u01(rng) * (hi - lo)
}

/// Uniform index in 0..n. `n` must be positive.
pub fn uniform_index(rng: &mut ChaCha12Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    let i = (u01(rng) * n as f64) as usize;
    i.min(n - 1)
}

/// Uniform integer in lo..=hi.
pub fn uniform_u64_inclusive(rng: &mut ChaCha12Rng, lo: u64, hi: u64) -> u64 {
    debug_assert!(hi >= lo);
    lo + uniform_index(rng, (hi - lo + 1) as usize) as u64
}

/// Number of events in one tick for a Poisson process of the given rate.
/// Knuth's product method; exact for the modest rates used here.
pub fn poisson(rng: &mut ChaCha12Rng, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    let limit = libm::exp(-rate);
    let mut count = 0u64;
    let mut product = 1.0f64;
    loop {
        product *= u01(rng);
        if product <= limit {
            return count;
        }
        count += 1;
    }
}

/// Zipf sampler over ranks 1..=n with exponent `s`: P(k) proportional to
/// k^-s. Sampling walks the precomputed cumulative mass with a binary
/// search, so empirical frequencies match the exact normalized masses.
#[derive(Clone, PartialEq, Debug)]
pub struct ZipfSampler {
    cumulative: Vec<f64>,
}

impl ZipfSampler {
    pub fn new(n: u32, exponent: f64) -> Self {
        assert!(n >= 1, "zipf support must be non-empty");
        let mut cumulative = Vec::with_capacity(n as usize);
        let mut total = 0.0f64;
        for k in 1..=n {
            total += libm::pow(k as f64, -exponent);
            cumulative.push(total);
        }
        for c in cumulative.iter_mut() {
            *c /= total;
        }
        ZipfSampler { cumulative }
    }

    /// Exact probability mass of rank `k` (1-based).
    pub fn mass(&self, k: u32) -> f64 {
        let i = (k - 1) as usize;
        if i == 0 {
            self.cumulative[0]
        } else {
            self.cumulative[i] - self.cumulative[i - 1]
        }
    }

    /// Draw a rank in 1..=n.
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> u32 {
        let u = u01(rng);
        let mut lo = 0usize;
        let mut hi = self.cumulative.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cumulative[mid] <= u {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo + 1) as u32
    }
}
