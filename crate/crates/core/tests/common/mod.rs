//! Reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: quadrature, sampling,
//! distribution functions and the KS statistic are written out from their
//! textbook definitions so that they can serve as independent oracles.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, LOG2_E, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `∫_0^∞ f` by exp-sinh quadrature, `x = exp(π/2 sinh t)`, halving the
/// step until two levels agree to `tol` (relative to the running value).
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let node = |t: f64| {
        let x = (FRAC_PI_2 * t.sinh()).exp();
        let dx = FRAC_PI_2 * t.cosh() * x;
        let v = f(x) * dx;
        if v.is_finite() { v } else { 0.0 }
    };
    // |t| ≤ 4.5 spans x from ~1e-19 to ~1e19.
    let t_max = 4.5;
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `∫_a^b f` by tanh-sinh quadrature.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let node = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        let x = u.tanh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let v = f(c + r * x) * w;
        if v.is_finite() { v } else { 0.0 }
    };
    let t_max = 3.5;
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * h * r;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = sum * h * r;
        if (next - estimate).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Seeded source of the Gaussians used by the test-side simulations.
pub struct Gaussians {
    rng: ChaCha20Rng,
}

impl Gaussians {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// `CN(0, 1)`: real and imaginary parts `N(0, 1/2)` by the polar method.
    pub fn cn(&mut self) -> Complex64 {
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                // sqrt(-2 ln s / s) gives unit variance; halve it per component.
                let m = (-s.ln() / s).sqrt();
                return Complex64::new(u * m, v * m);
            }
        }
    }

    /// Uniform direction on the unit sphere of `C^m`.
    pub fn unit_vector(&mut self, m: usize) -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..m).map(|_| self.cn()).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / n).collect()
    }
}

/// `aᴴb`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Poisson probabilities over `[lo, lo + len)`, covering all but a
/// negligible part of the mass, by recurrence outward from the mode.
fn poisson_window(mean: f64) -> (usize, Vec<f64>) {
    let width = (40.0 * mean.sqrt() + 40.0) as usize;
    let mode = mean.floor() as usize;
    let lo = mode.saturating_sub(width);
    let hi = mode + width;
    let mut p = vec![0.0; hi - lo + 1];
    // ln pmf(mode) with ln(mode!) from the log-gamma Stirling series.
    let ln_fact = |n: usize| -> f64 {
        if n < 32 {
            (2..=n).map(|k| (k as f64).ln()).sum()
        } else {
            let x = n as f64 + 1.0;
            (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x)
                - 1.0 / (360.0 * x.powi(3))
        }
    };
    let at_mode = if mean == 0.0 {
        1.0
    } else {
        (mode as f64 * mean.ln() - mean - ln_fact(mode)).exp()
    };
    p[mode - lo] = at_mode;
    for k in mode + 1..=hi {
        p[k - lo] = p[k - 1 - lo] * mean / k as f64;
    }
    for k in (lo..mode).rev() {
        p[k - lo] = p[k + 1 - lo] * (k + 1) as f64 / mean;
    }
    (lo, p)
}

/// CDF of `|√λ + √(2Σ) c|²`, `c ~ CN(0, 1)`, as a Poisson mixture of
/// central chi-squares: with `μ = λ/2Σ` and `y = x/2Σ`,
/// `F(x) = Σ_j Pois(j; μ) · P(Pois(y) ≥ j + 1)`.
pub struct Ncx2Mixture {
    two_sigma: f64,
    j_lo: usize,
    weights: Vec<f64>,
}

impl Ncx2Mixture {
    pub fn new(lambda: f64, sigma: f64) -> Self {
        let (j_lo, weights) = poisson_window(lambda / (2.0 * sigma));
        Self {
            two_sigma: 2.0 * sigma,
            j_lo,
            weights,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (i_lo, pi) = poisson_window(x / self.two_sigma);
        // upper[k] = P(Pois(y) ≥ i_lo + k)
        let mut upper = vec![0.0; pi.len() + 1];
        for k in (0..pi.len()).rev() {
            upper[k] = upper[k + 1] + pi[k];
        }
        let tail = |j: usize| -> f64 {
            let need = j + 1;
            if need <= i_lo {
                1.0
            } else if need - i_lo < upper.len() {
                upper[need - i_lo]
            } else {
                0.0
            }
        };
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * tail(self.j_lo + k))
            .sum::<f64>()
            .min(1.0)
    }
}

/// Asymptotic Kolmogorov survival function with the Stephens correction
/// for `n` samples.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let t = d * (sn + 0.12 + 0.11 / sn);
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

/// Two-sided KS statistic of sorted `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `∫_0^∞ e^{-x} log2(1 + βx) dx` by exp-sinh.
pub fn psr_bd_rate_quadrature(beta: f64) -> f64 {
    exp_sinh(|x| (-x).exp() * (beta * x).ln_1p() * LOG2_E, 1e-14)
}

/// `E log2(1 + |√λ + √(2Σ) c|²)` with `c = √s e^{jθ}`, `s ~ Exp(1)`:
/// trapezoid in `θ` (periodic, so geometrically convergent) inside an
/// exp-sinh integral over `s`.
pub fn csr_primary_rate_quadrature(lambda: f64, two_sigma: f64) -> f64 {
    let phases = 512;
    exp_sinh(
        |s| {
            let r = (two_sigma * s).sqrt();
            let cross = 2.0 * (lambda.sqrt() * r);
            let base = 1.0 + lambda + r * r;
            let mean: f64 = (0..phases)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / phases as f64;
                    (base + cross * th.cos()).log2()
                })
                .sum::<f64>()
                / phases as f64;
            (-s).exp() * mean
        },
        1e-13,
    )
}
