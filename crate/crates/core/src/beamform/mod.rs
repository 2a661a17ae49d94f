//! Transmit beamforming for the four design problems:
//!
//! | problem | goal | setup |
//! |---|---|---|
//! | [`Problem::WsrmPsr`] | max `ρR_s + (1−ρ)R_c` | PSR |
//! | [`Problem::WsrmCsr`] | max `ρR_s + (1−ρ)R_c` | CSR |
//! | [`Problem::TpmPsr`] | min `p` s.t. `R_s ≥ ε_s`, `R_c ≥ ε_c` | PSR |
//! | [`Problem::TpmCsr`] | min `p` s.t. `R_s ≥ ε_s`, `R_c ≥ ε_c` | CSR |
//!
//! All solvers work in the reduced basis ([`basis`]), where the lifted
//! variable `A = p·uuᴴ` is a 2×2 PSD matrix and its relaxation is a point of
//! the Bloch ball ([`hermitian`]). The relaxed optimum decides whether the
//! answer is read off an eigenvector or extracted by randomization
//! ([`randomize`]). Expectations over the BD symbol are replaced by
//! sample averages over one fixed set of antithetic draws per solve.

pub mod basis;
pub mod hermitian;
pub mod oracle;
pub mod randomize;
pub mod search;
mod tpm;
mod wsrm;

pub use basis::{reduce_basis, GainModel, ReducedBasis};
pub use hermitian::Hermitian2;
pub use oracle::{brute_force_search, full_space_refined, full_space_search};
pub use tpm::{min_power_csr, min_power_psr, solve_tpm_csr, solve_tpm_psr};
pub use wsrm::{solve_wsrm_csr, solve_wsrm_psr};

use serde::{Deserialize, Serialize};

use crate::channel::{Beamformer, ChannelRealization, SystemParams};
use crate::error::{Error, Result};
use crate::rates::{self, RatePair, SaaDraws};
use crate::rng::derive_seed;

/// Sub-stream indices under [`SolverConfig::seed`].
pub(crate) const SAA_STREAM: u64 = 0;
pub(crate) const RANDOMIZATION_STREAM: u64 = 1;

/// Numerical settings shared by all solvers and oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Number of log-spaced interference levels in the PSR sweep.
    pub xi_steps: usize,
    /// Golden-section stopping width, relative to the sweep range.
    pub xi_refine_tol: f64,
    /// Randomization trials `D`.
    pub rand_trials: usize,
    /// `λ_min/λ_max` below which a relaxed solution counts as rank one.
    pub rank_one_tol: f64,
    /// Common BD-symbol draws for CSR expectations.
    pub saa_samples: usize,
    /// Oracle grid over `t` and `φ`.
    pub grid_t: usize,
    pub grid_phi: usize,
    /// Grid size on the rank-one great circle.
    pub circle_steps: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            xi_steps: 200,
            xi_refine_tol: 1e-6,
            rand_trials: 1000,
            rank_one_tol: 1e-6,
            saa_samples: 2000,
            grid_t: 64,
            grid_phi: 64,
            circle_steps: 360,
            seed: 0x5eed,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.xi_steps < 32 {
            return bad(format!("xi_steps must be >= 32, got {}", self.xi_steps));
        }
        if self.rand_trials < 100 {
            return bad(format!("rand_trials must be >= 100, got {}", self.rand_trials));
        }
        if self.saa_samples < 500 {
            return bad(format!("saa_samples must be >= 500, got {}", self.saa_samples));
        }
        if self.grid_t < 64 || self.grid_phi < 64 {
            return bad("oracle grids must have >= 64 points per axis".into());
        }
        if self.circle_steps < 64 {
            return bad(format!("circle_steps must be >= 64, got {}", self.circle_steps));
        }
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.xi_refine_tol) || !pos(self.rank_one_tol) {
            return bad("tolerances must be finite and > 0".into());
        }
        Ok(())
    }

    /// The common draws used by every CSR solve and oracle with this config.
    pub fn draws(&self) -> SaaDraws {
        SaaDraws::new(self.saa_samples, derive_seed(self.seed, SAA_STREAM))
    }
}

/// One of the four design problems. Rate targets are in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Problem {
    WsrmPsr,
    WsrmCsr,
    TpmPsr { eps_s: f64, eps_c: f64 },
    TpmCsr { eps_s: f64, eps_c: f64 },
}

impl Problem {
    /// `true` for power minimization.
    pub fn minimizes(&self) -> bool {
        matches!(self, Problem::TpmPsr { .. } | Problem::TpmCsr { .. })
    }

    fn targets(&self) -> Option<(f64, f64)> {
        match *self {
            Problem::TpmPsr { eps_s, eps_c } | Problem::TpmCsr { eps_s, eps_c } => Some((eps_s, eps_c)),
            _ => None,
        }
    }
}

/// How the returned beamformer was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extraction {
    /// Principal eigenvector of a rank-one relaxed solution.
    Eigvec,
    /// Gaussian-phase randomization around a higher-rank relaxed solution.
    Randomized,
    /// Direct search over directions (oracles).
    Search,
}

/// Work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub evaluations: usize,
    pub grid_points: usize,
    pub refinements: usize,
    pub randomization_trials: usize,
}

/// Solver output.
///
/// `objective` is a rate (maximization) or a transmit power (minimization).
/// For CSR problems it is computed with the solve's sample average; the
/// quadrature value of the same beamformer is in `exact_objective`.
/// `sdr_bound` is the relaxed optimum: an upper bound for maximization, a
/// lower bound for minimization.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub w: Beamformer,
    pub objective: f64,
    pub sdr_bound: f64,
    /// `λ_min/λ_max` of the relaxed solution.
    pub rank_ratio: f64,
    pub extraction: Extraction,
    /// Transmit power of the returned solution.
    pub power: f64,
    /// Rates achieved by `(power, w)`, CSR primary by quadrature.
    pub rates: RatePair,
    pub exact_objective: Option<f64>,
    /// `h1 ∥ h2`.
    pub degenerate: bool,
    pub stats: SolveStats,
}

/// Per-direction objective at the gain level, shared by solvers and oracles.
pub(crate) struct Objective<'a> {
    pub problem: Problem,
    pub params: SystemParams,
    pub g_sqr: f64,
    pub draws: Option<&'a SaaDraws>,
    /// `2^{ε_s} − 1` (PSR) and the BD SNR requirement.
    pub sinr_target: f64,
    pub bd_snr_target: f64,
}

impl<'a> Objective<'a> {
    pub fn new(
        problem: Problem,
        params: &SystemParams,
        g_sqr: f64,
        draws: Option<&'a SaaDraws>,
    ) -> Result<Self> {
        let (mut sinr_target, mut bd_snr_target) = (0.0, 0.0);
        if let Some((eps_s, eps_c)) = problem.targets() {
            let ok = |x: f64| x.is_finite() && x >= 0.0;
            if !ok(eps_s) || !ok(eps_c) {
                return Err(Error::InvalidParams(format!(
                    "rate targets must be finite and >= 0, got ε_s={eps_s}, ε_c={eps_c}"
                )));
            }
            match problem {
                Problem::TpmPsr { .. } => {
                    sinr_target = eps_s.exp2() - 1.0;
                    bd_snr_target = rates::invert_psr_bd_rate(eps_c)?;
                }
                _ => {
                    let n = params.spreading as f64;
                    bd_snr_target = ((n * eps_c).exp2() - 1.0) / n;
                }
            }
        }
        if matches!(problem, Problem::WsrmCsr | Problem::TpmCsr { .. }) && draws.is_none() {
            return Err(Error::InvalidParams("CSR problems need sample draws".into()));
        }
        Ok(Self {
            problem,
            params: *params,
            g_sqr,
            draws,
            sinr_target,
            bd_snr_target,
        })
    }

    /// Natural-unit value (rate or power) at unit-power gains `(x1, x2)`.
    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        let p = &self.params;
        let s2 = p.noise_power;
        let k2 = p.reflection * self.g_sqr;
        match self.problem {
            Problem::WsrmPsr => {
                let gains = rates::LinkGains {
                    direct: x1,
                    backscatter: x2,
                };
                p.weight * rates::psr_primary_from_gains(p, self.g_sqr, gains)
                    + (1.0 - p.weight) * rates::psr_bd_from_gains(p, self.g_sqr, gains)
            }
            Problem::WsrmCsr => {
                let snr = p.transmit_power / s2;
                let a = snr * x1;
                let b = snr * k2 * x2;
                let draws = self.draws.expect("checked at construction");
                p.weight * draws.mean_rate(a, b, (a * b).sqrt())
                    + (1.0 - p.weight) * rates::csr_bd_from_beta(p.spreading, b)
            }
            Problem::TpmPsr { .. } => {
                let bd = bd_power(self.bd_snr_target, s2, k2 * x2);
                let sinr = if self.sinr_target == 0.0 {
                    0.0
                } else {
                    let den = x1 - self.sinr_target * k2 * x2;
                    if den > 0.0 {
                        self.sinr_target * s2 / den
                    } else {
                        f64::INFINITY
                    }
                };
                bd.max(sinr)
            }
            Problem::TpmCsr { eps_s, .. } => {
                let bd = bd_power(self.bd_snr_target, s2, k2 * x2);
                let draws = self.draws.expect("checked at construction");
                let a = x1 / s2;
                let b = k2 * x2 / s2;
                bd.max(saa_min_power(draws, eps_s, a, b, (a * b).sqrt()))
            }
        }
    }

    /// Larger is better.
    pub fn score(&self, value: f64) -> f64 {
        if self.problem.minimizes() {
            -value
        } else {
            value
        }
    }
}

fn bd_power(target: f64, s2: f64, backscatter: f64) -> f64 {
    if target == 0.0 {
        0.0
    } else if backscatter > 0.0 {
        target * s2 / backscatter
    } else {
        f64::INFINITY
    }
}

/// Least `p` with `SAA E log2(1 + p(a + b|c|² + 2d Re c)) ≥ eps_s`.
///
/// The left side is increasing and concave in `p`. Jensen gives the lower
/// bound `(2^{ε_s} − 1)/mean(y)`; the root is bracketed by doubling and
/// polished by Newton steps in `ln p`, falling back to bisection.
pub(crate) fn saa_min_power(draws: &SaaDraws, eps_s: f64, a: f64, b: f64, d: f64) -> f64 {
    if eps_s == 0.0 {
        return 0.0;
    }
    let mean_y = a + b; // E|c|² = 1 and antithetic E Re c = 0
    if mean_y <= 0.0 {
        return f64::INFINITY;
    }
    let f = |p: f64| draws.mean_rate(p * a, p * b, p * d) - eps_s;
    let mut lo = (eps_s.exp2() - 1.0) / mean_y;
    if f(lo) >= 0.0 {
        return lo;
    }
    let mut hi = 2.0 * lo;
    let mut tries = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return f64::INFINITY;
        }
    }
    let mut x = (lo * hi).sqrt();
    for _ in 0..100 {
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
        let (v, g) = draws.mean_rate_grad(x * a, x * b, x * d);
        let fx = v - eps_s;
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // d/d ln p of the rate is p (a g_a + b g_b + d g_d).
        let slope = x * (a * g[0] + b * g[1] + d * g[2]);
        let mut next = if slope > 0.0 { x * (-fx / slope).exp() } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = (lo * hi).sqrt();
        }
        if (next / x - 1.0).abs() < 1e-14 {
            x = next;
            break;
        }
        x = next;
    }
    // Return a power that is feasible up to rounding.
    if f(x) >= -1e-12 {
        x
    } else {
        hi
    }
}

/// Rates achieved by `w` at transmit power `power`.
pub(crate) fn achieved_rates(
    ch: &ChannelRealization,
    w: &Beamformer,
    params: &SystemParams,
    power: f64,
) -> RatePair {
    let at = SystemParams {
        transmit_power: power.max(f64::MIN_POSITIVE),
        ..*params
    };
    rates::rate_pair(ch, w.as_slice(), &at)
}

pub(crate) fn check_inputs(ch: &ChannelRealization, params: &SystemParams, cfg: &SolverConfig) -> Result<()> {
    params.validate()?;
    cfg.validate()?;
    ch.validate()?;
    if ch.antennas() != params.antennas {
        return Err(Error::InvalidParams(format!(
            "channel has {} antennas but params say {}",
            ch.antennas(),
            params.antennas
        )));
    }
    Ok(())
}
