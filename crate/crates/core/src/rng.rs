//! Portable random streams.
//!
//! Every stream is a ChaCha8 generator ([`rand_chacha::ChaCha8Rng`]) seeded
//! with `seed_from_u64`. Gaussians come from an explicit Box–Muller step, so
//! a seed produces the same numbers on every platform and `rand` version
//! that keeps ChaCha8 stable. Independent sub-streams are derived by
//! mixing `(master, index)` through SplitMix64.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Complex64;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// A seeded random stream with Gaussian helpers.
#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Sub-stream `index` of `master`.
    pub fn derived(master: u64, index: u64) -> Self {
        Self::new(derive_seed(master, index))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Standard normal via Box–Muller; the second variate is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Circularly symmetric complex Gaussian with `E|z|² = 1`.
    pub fn cn(&mut self) -> Complex64 {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let re = self.normal();
        let im = self.normal();
        Complex64::new(re * scale, im * scale)
    }

    /// Vector of `len` i.i.d. `CN(0, 1)` entries.
    pub fn cn_vec(&mut self, len: usize) -> Vec<Complex64> {
        (0..len).map(|_| self.cn()).collect()
    }

    /// Uniform phase `e^{iθ}`, `θ ∈ [0, 2π)`.
    pub fn unit_phase(&mut self) -> Complex64 {
        Complex64::from_polar(1.0, std::f64::consts::TAU * self.uniform())
    }

    /// Unit-rate exponential.
    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }
}
