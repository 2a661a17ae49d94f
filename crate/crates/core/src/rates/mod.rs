//! Achievable rates of the primary link and the BD link.
//!
//! Every rate depends on the beamformer only through the two link gains
//! `|h1ᴴw|²` and `|h2ᴴw|²`, so each public function that takes
//! `(ch, w, params)` has a gain-level twin used by the solvers.
//!
//! PSR (`N = 1`) treats the BD signal as interference when decoding the
//! primary symbol and decodes the BD after perfect cancellation. CSR
//! (`N >> 1`) sees the BD as a slow multipath component: the primary SNR
//! `p|h1ᴴw + √α c* g* h2ᴴw|²/σ²` is a noncentral chi-square variable with two
//! degrees of freedom, and the BD enjoys a spreading gain of `N`.

pub mod ks;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{inner, ChannelRealization, SystemParams};
use crate::error::{domain, Error, Result};
use crate::rng::{derive_seed, Stream};
use crate::specfun::{self, Quadrature};
use crate::Complex64;

use std::f64::consts::LOG2_E;

/// Which decoding setup produced a rate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setup {
    Psr,
    Csr,
}

/// Primary and BD rates in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub primary_rate: f64,
    pub bd_rate: f64,
    pub setup: Setup,
}

impl RatePair {
    pub fn sum(&self) -> f64 {
        self.primary_rate + self.bd_rate
    }
}

/// Link gains `(|h1ᴴw|², |h2ᴴw|²)` of a beamformer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub direct: f64,
    pub backscatter: f64,
}

impl LinkGains {
    pub fn of(ch: &ChannelRealization, w: &[Complex64]) -> Self {
        Self {
            direct: inner(&ch.h1, w).norm_sqr(),
            backscatter: inner(&ch.h2, w).norm_sqr(),
        }
    }
}

/// SNR split of the CSR primary link: `λ = p|h1ᴴw|²/σ²` and
/// `2Σ = pα|g|²|h2ᴴw|²/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrDecomposition {
    pub direct_snr: f64,
    pub backscatter_snr: f64,
}

impl SnrDecomposition {
    pub fn new(direct_snr: f64, backscatter_snr: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(direct_snr) || !ok(backscatter_snr) {
            return Err(Error::InvalidParams(format!(
                "SNRs must be finite and >= 0, got λ={direct_snr}, 2Σ={backscatter_snr}"
            )));
        }
        Ok(Self {
            direct_snr,
            backscatter_snr,
        })
    }

    pub fn from_gains(gains: LinkGains, params: &SystemParams, g_sqr: f64) -> Self {
        let snr = params.transmit_power / params.noise_power;
        Self {
            direct_snr: snr * gains.direct,
            backscatter_snr: snr * params.reflection * g_sqr * gains.backscatter,
        }
    }

    pub fn of(ch: &ChannelRealization, w: &[Complex64], params: &SystemParams) -> Self {
        Self::from_gains(LinkGains::of(ch, w), params, ch.g.norm_sqr())
    }

    /// The per-component variance `Σ`.
    pub fn sigma(&self) -> f64 {
        0.5 * self.backscatter_snr
    }
}

/// Backscatter-link SNR `β = αp|g|²x2/σ²`.
pub(crate) fn beta(params: &SystemParams, g_sqr: f64, backscatter_gain: f64) -> f64 {
    params.reflection * params.transmit_power * g_sqr * backscatter_gain / params.noise_power
}

/// PSR primary SINR `p x1 / (αp|g|²x2 + σ²)`.
pub(crate) fn psr_sinr(params: &SystemParams, g_sqr: f64, gains: LinkGains) -> f64 {
    let p = params.transmit_power;
    p * gains.direct / (params.reflection * p * g_sqr * gains.backscatter + params.noise_power)
}

pub(crate) fn psr_primary_from_gains(params: &SystemParams, g_sqr: f64, gains: LinkGains) -> f64 {
    psr_sinr(params, g_sqr, gains).ln_1p() * LOG2_E
}

pub(crate) fn psr_bd_from_gains(params: &SystemParams, g_sqr: f64, gains: LinkGains) -> f64 {
    specfun::psr_bd_rate_unchecked(beta(params, g_sqr, gains.backscatter))
}

pub(crate) fn csr_bd_from_beta(spreading: u32, beta: f64) -> f64 {
    let n = spreading as f64;
    (n * beta).ln_1p() * LOG2_E / n
}

/// PSR primary rate `log2(1 + p|h1ᴴw|² / (αp|g|²|h2ᴴw|² + σ²))`.
pub fn psr_primary_rate(ch: &ChannelRealization, w: &[Complex64], params: &SystemParams) -> f64 {
    psr_primary_from_gains(params, ch.g.norm_sqr(), LinkGains::of(ch, w))
}

/// PSR BD rate `E_s[log2(1 + β|s|²)]` in closed form.
pub fn psr_bd_rate(ch: &ChannelRealization, w: &[Complex64], params: &SystemParams) -> f64 {
    psr_bd_from_gains(params, ch.g.norm_sqr(), LinkGains::of(ch, w))
}

/// CSR BD rate `(1/N) log2(1 + Nβ)`.
pub fn csr_bd_rate(ch: &ChannelRealization, w: &[Complex64], params: &SystemParams) -> f64 {
    let b = beta(params, ch.g.norm_sqr(), LinkGains::of(ch, w).backscatter);
    csr_bd_from_beta(params.spreading, b)
}

/// Rate pair for the setup selected by `params.spreading`, with the CSR
/// primary rate from quadrature.
pub fn rate_pair(ch: &ChannelRealization, w: &[Complex64], params: &SystemParams) -> RatePair {
    let gains = LinkGains::of(ch, w);
    rate_pair_from_gains(params, ch.g.norm_sqr(), gains)
}

pub(crate) fn rate_pair_from_gains(params: &SystemParams, g_sqr: f64, gains: LinkGains) -> RatePair {
    if params.is_psr() {
        RatePair {
            primary_rate: psr_primary_from_gains(params, g_sqr, gains),
            bd_rate: psr_bd_from_gains(params, g_sqr, gains),
            setup: Setup::Psr,
        }
    } else {
        let decomp = SnrDecomposition::from_gains(gains, params, g_sqr);
        RatePair {
            primary_rate: csr_primary_rate_exact(&decomp).value,
            bd_rate: csr_bd_from_beta(params.spreading, beta(params, g_sqr, gains.backscatter)),
            setup: Setup::Csr,
        }
    }
}

/// Result of [`csr_primary_rate_exact`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRate {
    pub value: f64,
    /// Quadrature error estimate, or the Monte Carlo standard error when
    /// the fallback was used.
    pub error: f64,
    /// `true` when quadrature failed and the value is a Monte Carlo
    /// estimate.
    pub fallback: bool,
}

const FALLBACK_SAMPLES: usize = 1 << 20;
const FALLBACK_SEED: u64 = 0x5eed_fa11;

/// CSR primary rate `∫ log2(1 + x) f(x) dx` with `f` the noncentral
/// chi-square density of the decomposition, by adaptive Gauss–Kronrod
/// quadrature on a window of ±40 standard deviations around the mean.
///
/// The window is accepted only when the density integrates to one within
/// `1e-9` over it; otherwise (or if quadrature does not converge) a Monte
/// Carlo estimate is returned with `fallback = true`. For `Σ = 0` the
/// variable is deterministic and the rate is `log2(1 + λ)`.
pub fn csr_primary_rate_exact(decomp: &SnrDecomposition) -> ExactRate {
    let lambda = decomp.direct_snr;
    let sigma = decomp.sigma();
    if sigma == 0.0 {
        return ExactRate {
            value: lambda.ln_1p() * LOG2_E,
            error: 0.0,
            fallback: false,
        };
    }
    let window = specfun::ncx2_window(lambda, sigma);
    let quad = Quadrature {
        abs_tol: 1e-10,
        rel_tol: 1e-12,
        ..Quadrature::default()
    };
    let rate = quad.integrate_with_breaks(
        |x| x.ln_1p() * specfun::ncx2_pdf(x, lambda, sigma),
        &window,
    );
    let mass = quad.integrate_with_breaks(|x| specfun::ncx2_pdf(x, lambda, sigma), &window);
    if rate.converged && mass.converged && (1.0 - mass.value).abs() <= 1e-9 {
        return ExactRate {
            value: rate.value * LOG2_E,
            error: rate.error * LOG2_E,
            fallback: false,
        };
    }
    let est = decomposition_mc(lambda, decomp.backscatter_snr, FALLBACK_SAMPLES, FALLBACK_SEED);
    ExactRate {
        value: est.mean,
        error: est.std_error,
        fallback: true,
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

const MC_CHUNK: usize = 8192;

/// Running mean and sum of squared deviations, merged in chunk order.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn estimate(self) -> McEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n).sqrt(),
            samples: self.n as usize,
        }
    }
}

/// Averages `f(stream)` over `samples` draws, split into fixed chunks with
/// seeds derived from `seed`. The result does not depend on the number of
/// worker threads.
pub(crate) fn chunked_mean<F>(samples: usize, seed: u64, f: F) -> McEstimate
where
    F: Fn(&mut Stream) -> f64 + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut stream = Stream::derived(seed, k as u64);
            let len = MC_CHUNK.min(samples - k * MC_CHUNK);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(f(&mut stream));
            }
            m
        })
        .collect();
    parts
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate()
}

fn decomposition_mc(lambda: f64, two_sigma: f64, samples: usize, seed: u64) -> McEstimate {
    let a = lambda.sqrt();
    let b = two_sigma.sqrt();
    chunked_mean(samples, seed, |s| {
        let c = s.cn();
        (Complex64::new(a, 0.0) + b * c).norm_sqr().ln_1p() * LOG2_E
    })
}

/// CSR primary rate `E_c[log2(1 + p|h_eq(c)ᴴw|²/σ²)]` by Monte Carlo over
/// `c ~ CN(0, 1)`. Requires at least 1000 samples.
pub fn csr_primary_rate_mc(
    ch: &ChannelRealization,
    w: &[Complex64],
    params: &SystemParams,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 1000 {
        return Err(Error::InvalidParams(format!(
            "Monte Carlo needs at least 1000 samples, got {samples}"
        )));
    }
    let a = inner(&ch.h1, w);
    let b = inner(&ch.h2, w);
    let k = ch.g * params.reflection.sqrt();
    let snr = params.transmit_power / params.noise_power;
    // h_eqᴴw = h1ᴴw + (√α c g)* h2ᴴw
    Ok(chunked_mean(samples, seed, |s| {
        let c = s.cn();
        let y = a + (k * c).conj() * b;
        (snr * y.norm_sqr()).ln_1p() * LOG2_E
    }))
}

/// High-SNR CSR primary rate `log2 λ − Ei(−λ/2Σ) log2 e`.
pub fn csr_primary_rate_asymptotic(decomp: &SnrDecomposition) -> Result<f64> {
    let (lambda, two_sigma) = (decomp.direct_snr, decomp.backscatter_snr);
    if lambda <= 0.0 || two_sigma <= 0.0 {
        return Err(domain(
            "csr_primary_rate_asymptotic",
            format!("need λ > 0 and Σ > 0, got λ={lambda}, 2Σ={two_sigma}"),
        ));
    }
    Ok(lambda.log2() + csr_rate_gain(lambda, two_sigma))
}

/// The gain term `−Ei(−λ/2Σ) log2 e` of the asymptotic rate.
pub fn csr_rate_gain(lambda: f64, two_sigma: f64) -> f64 {
    specfun::e1(lambda / two_sigma) * LOG2_E
}

/// Backscatter SNR `γ_β(ε_c)` that achieves PSR BD rate `ε_c`.
///
/// Bracketing by doubling/halving, then bisection on the geometric mean
/// until the bracket is relatively tighter than `1e-13`.
pub fn invert_psr_bd_rate(epsilon_c: f64) -> Result<f64> {
    if !epsilon_c.is_finite() || epsilon_c < 0.0 {
        return Err(domain(
            "invert_psr_bd_rate",
            format!("need finite epsilon_c >= 0, got {epsilon_c}"),
        ));
    }
    if epsilon_c == 0.0 {
        return Ok(0.0);
    }
    let f = specfun::psr_bd_rate_unchecked;
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(hi) < epsilon_c {
        hi *= 2.0;
    }
    while f(lo) > epsilon_c {
        lo *= 0.5;
    }
    if lo == hi {
        if f(lo) == epsilon_c {
            return Ok(lo);
        }
        lo = hi * 0.5;
    }
    while hi / lo - 1.0 > 1e-13 {
        let mid = (lo * hi).sqrt();
        if f(mid) < epsilon_c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Common random draws of the BD symbol for sample-average approximation.
///
/// Draws come in antithetic pairs `(c, −c)`. Because the law of the CSR
/// primary SNR depends only on `λ`, `2Σ` and the magnitude of the cross
/// term, each draw is stored as `(|c|², Re c)`.
#[derive(Debug, Clone)]
pub struct SaaDraws {
    mag_sqr: Vec<f64>,
    real: Vec<f64>,
}

impl SaaDraws {
    /// `samples` draws (rounded up to even) from stream `seed`.
    pub fn new(samples: usize, seed: u64) -> Self {
        let half = samples.div_ceil(2);
        let mut stream = Stream::new(seed);
        let mut mag_sqr = Vec::with_capacity(2 * half);
        let mut real = Vec::with_capacity(2 * half);
        for _ in 0..half {
            let c = stream.cn();
            for sign in [1.0, -1.0] {
                mag_sqr.push(c.norm_sqr());
                real.push(sign * c.re);
            }
        }
        Self { mag_sqr, real }
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    /// SAA estimate of `E log2(1 + a + b|c|² + 2d Re c)` where `a` is the
    /// direct SNR, `b` the backscatter SNR and `d ≤ √(ab)` the cross-term
    /// magnitude (`d = √(ab)` for a beamforming vector).
    pub fn mean_rate(&self, a: f64, b: f64, d: f64) -> f64 {
        let total: f64 = self
            .mag_sqr
            .iter()
            .zip(&self.real)
            .map(|(&m, &r)| (a + b * m + 2.0 * d * r).max(0.0).ln_1p())
            .sum();
        total * LOG2_E / self.len() as f64
    }

    /// Rate and its gradient with respect to `(a, b, d)`.
    pub fn mean_rate_grad(&self, a: f64, b: f64, d: f64) -> (f64, [f64; 3]) {
        let mut total = 0.0;
        let mut grad = [0.0; 3];
        for (&m, &r) in self.mag_sqr.iter().zip(&self.real) {
            let y = 1.0 + (a + b * m + 2.0 * d * r).max(0.0);
            total += y.ln();
            let inv = 1.0 / y;
            grad[0] += inv;
            grad[1] += m * inv;
            grad[2] += 2.0 * r * inv;
        }
        let scale = LOG2_E / self.len() as f64;
        (total * scale, grad.map(|g| g * scale))
    }

    /// SAA primary rate of a decomposition (beamformer case).
    pub fn rate(&self, decomp: &SnrDecomposition) -> f64 {
        let (a, b) = (decomp.direct_snr, decomp.backscatter_snr);
        self.mean_rate(a, b, (a * b).sqrt())
    }
}

/// Literal draws of the CSR primary SNR `p|h_eq(c)ᴴw|²/σ²`, building the
/// equivalent channel for each `c`. Deterministic given `seed`.
pub fn simulate_primary_snr(
    ch: &ChannelRealization,
    w: &[Complex64],
    params: &SystemParams,
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    let snr = params.transmit_power / params.noise_power;
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut stream = Stream::new(derive_seed(seed, k as u64));
            let len = MC_CHUNK.min(samples - k * MC_CHUNK);
            (0..len)
                .map(|_| {
                    let c = stream.cn();
                    let heq = crate::channel::equivalent_channel(ch, params.reflection, c);
                    snr * inner(&heq, w).norm_sqr()
                })
                .collect()
        })
        .collect();
    parts.concat()
}
