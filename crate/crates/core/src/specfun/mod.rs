//! Special functions used by the rate expressions.
//!
//! Only what the rate formulas need is provided: the exponential integral on
//! the negative axis, the exponentially scaled modified Bessel function
//! `I0`, the function `q1(x) = ln x - Ei(-x)`, the two-degree-of-freedom
//! noncentral chi-square density, and the PSR backscatter rate in closed form.

mod quadrature;

pub use quadrature::{gauss_kronrod_panel, Integral, Quadrature};

use std::f64::consts::LOG2_E;

use crate::error::{domain, Result};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this argument `E1` uses its power series, above it the
/// continued fraction.
const E1_SERIES_LIMIT: f64 = 1.0;

/// Exponential integral `E1(t) = -Ei(-t)` for `t > 0`. No argument checks.
pub(crate) fn e1(t: f64) -> f64 {
    if t <= E1_SERIES_LIMIT {
        e1_series(t)
    } else {
        (-t).exp() * e1_scaled_fraction(t)
    }
}

/// `e^t E1(t)` for `t > 0`, finite for all `t` (tends to `1/t`).
pub(crate) fn e1_scaled(t: f64) -> f64 {
    if t <= E1_SERIES_LIMIT {
        t.exp() * e1_series(t)
    } else {
        e1_scaled_fraction(t)
    }
}

fn e1_series(t: f64) -> f64 {
    // E1(t) = -gamma - ln t - sum_{k>=1} (-t)^k / (k k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -t / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - t.ln() - sum
}

fn e1_scaled_fraction(t: f64) -> f64 {
    // Modified Lentz evaluation of the continued fraction for e^t E1(t).
    const TINY: f64 = 1e-300;
    let mut b = t + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Exponential integral `Ei(x) = ∫_{-∞}^{x} e^u / u du` on the negative axis.
///
/// The result is negative and increases towards `0` as `x → -∞`; for
/// `x < -745` it underflows to `-0.0`.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if !x.is_finite() || x >= 0.0 {
        return Err(domain("exp_integral_ei", format!("need finite x < 0, got {x}")));
    }
    Ok(-e1(-x))
}

const I0E_SMALL: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

const I0E_LARGE: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

fn chebyshev(x: f64, coeffs: &[f64]) -> f64 {
    let mut b0 = coeffs[0];
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x.mul_add(b1, c) - b2;
    }
    0.5 * (b0 - b2)
}

/// `e^{-x} I0(x)` for `x >= 0`. No argument checks.
pub(crate) fn i0e(x: f64) -> f64 {
    if x <= 8.0 {
        chebyshev(x.mul_add(0.5, -2.0), &I0E_SMALL)
    } else {
        chebyshev(32.0 / x - 2.0, &I0E_LARGE) / x.sqrt()
    }
}

/// Exponentially scaled modified Bessel function of the first kind,
/// `e^{-x} I0(x)`, with values in `(0, 1]`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain("bessel_i0_scaled", format!("need finite x >= 0, got {x}")));
    }
    Ok(i0e(x))
}

/// `q1(x) = ln x - Ei(-x)`, the mean of `ln V` for `V = |√x + c|²` with
/// `c ~ CN(0, 1)`.
pub fn q1(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain("q1", format!("need finite x > 0, got {x}")));
    }
    Ok(x.ln() + e1(x))
}

/// Density of `|√λ + √(2Σ) c|²` with `c ~ CN(0, 1)`, i.e. a noncentral
/// chi-square with two degrees of freedom, noncentrality `lambda` and
/// per-component variance `sigma_param`.
pub fn noncentral_chi2_pdf(x: f64, lambda: f64, sigma_param: f64) -> Result<f64> {
    check_ncx2("noncentral_chi2_pdf", x, lambda, sigma_param)?;
    Ok(ncx2_pdf(x, lambda, sigma_param))
}

fn check_ncx2(func: &'static str, x: f64, lambda: f64, sigma_param: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain(func, format!("need finite x >= 0, got {x}")));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(domain(func, format!("need finite lambda >= 0, got {lambda}")));
    }
    if !sigma_param.is_finite() || sigma_param <= 0.0 {
        return Err(domain(func, format!("need finite sigma > 0, got {sigma_param}")));
    }
    Ok(())
}

/// Unchecked density. The Bessel factor is folded into the exponent as
/// `-(√x - √λ)² / 2Σ` so nothing overflows at large `λ / Σ`.
pub(crate) fn ncx2_pdf(x: f64, lambda: f64, sigma_param: f64) -> f64 {
    let two_sigma = 2.0 * sigma_param;
    let gap = x.sqrt() - lambda.sqrt();
    let arg = (x * lambda).sqrt() / sigma_param;
    (-gap * gap / two_sigma).exp() * i0e(arg) / two_sigma
}

/// Integration window `[lo, mode_hint, hi]` holding all but a negligible
/// fraction of the noncentral chi-square mass.
pub(crate) fn ncx2_window(lambda: f64, sigma_param: f64) -> [f64; 3] {
    let mean = lambda + 2.0 * sigma_param;
    let spread = (2.0 * sigma_param * (lambda + sigma_param)).sqrt();
    let lo = (mean - 40.0 * spread).max(0.0);
    let hi = mean + 40.0 * spread;
    [lo, mean.clamp(lo, hi), hi]
}

/// Cumulative distribution of [`noncentral_chi2_pdf`], by adaptive quadrature.
pub fn noncentral_chi2_cdf(x: f64, lambda: f64, sigma_param: f64) -> Result<f64> {
    check_ncx2("noncentral_chi2_cdf", x, lambda, sigma_param)?;
    let [lo, mid, hi] = ncx2_window(lambda, sigma_param);
    if x >= hi {
        return Ok(1.0);
    }
    let q = Quadrature::default();
    let f = |t: f64| ncx2_pdf(t, lambda, sigma_param);
    let mut points = vec![0.0];
    for p in [lo, mid] {
        if p > 0.0 && p < x {
            points.push(p);
        }
    }
    points.push(x);
    Ok(q.integrate_with_breaks(f, &points).value.clamp(0.0, 1.0))
}

/// PSR backscatter rate `∫_0^∞ e^{-x} log2(1 + βx) dx = -e^{1/β} Ei(-1/β) log2 e`
/// in bits/s/Hz. Zero at `β = 0`; increasing and concave in `β`.
pub fn psr_bd_rate_closed(beta: f64) -> Result<f64> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(domain("psr_bd_rate_closed", format!("need finite beta >= 0, got {beta}")));
    }
    Ok(psr_bd_rate_unchecked(beta))
}

pub(crate) fn psr_bd_rate_unchecked(beta: f64) -> f64 {
    if beta <= 0.0 {
        0.0
    } else {
        e1_scaled(1.0 / beta) * LOG2_E
    }
}
