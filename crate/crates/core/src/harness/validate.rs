//! Self-check suite behind the `validate` subcommand.
//!
//! Each check reports what it measured against a stated tolerance. A
//! [`Mutation`] deliberately corrupts one formula inside its check, which
//! lets tests confirm that the suite notices and names the broken
//! invariant.

use std::f64::consts::LOG2_E;
use std::str::FromStr;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::config_hash;
use crate::beamform::{
    brute_force_search, full_space_search, randomize::randomized_candidates, solve_tpm_csr,
    solve_tpm_psr, solve_wsrm_csr, solve_wsrm_psr, Hermitian2, Problem, SolverConfig,
};
use crate::channel::{generate_channels, norm_sqr, SystemParams};
use crate::error::{Error, Result};
use crate::rates::{self, ks::ks_test, SnrDecomposition};
use crate::rng::derive_seed;
use crate::specfun::{self, Quadrature};

/// A deliberate defect injected into one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Scales the closed-form PSR BD rate by `1 + 1e-3`.
    PsrBdRate,
    /// Uses a 5% larger noncentrality in the reference distribution.
    Ncx2Pdf,
    /// Lowers the PSR weighted-sum solver's objective by 0.01 bits.
    SolverObjective,
}

impl Mutation {
    pub const NAMES: [&'static str; 3] = ["psr_bd_rate", "ncx2_pdf", "solver_objective"];
}

impl FromStr for Mutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psr_bd_rate" => Ok(Mutation::PsrBdRate),
            "ncx2_pdf" => Ok(Mutation::Ncx2Pdf),
            "solver_objective" => Ok(Mutation::SolverObjective),
            _ => Err(Error::Config(format!(
                "unknown mutation {s:?}; expected one of {:?}",
                Mutation::NAMES
            ))),
        }
    }
}

/// Whether `measured` must stay below or above `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub bound: Bound,
    pub measured: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn upper(name: &'static str, tolerance: f64, measured: f64, detail: String) -> Self {
        Self {
            name,
            tolerance,
            bound: Bound::Upper,
            measured,
            passed: measured <= tolerance,
            detail,
        }
    }

    fn lower(name: &'static str, tolerance: f64, measured: f64, detail: String) -> Self {
        Self {
            name,
            tolerance,
            bound: Bound::Lower,
            measured,
            passed: measured >= tolerance,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub mutation: Option<Mutation>,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn quadrature() -> Quadrature {
    Quadrature::new(16, 1e-13, 1e-13).expect("valid quadrature")
}

fn ei_vs_quadrature() -> Result<Check> {
    let q = quadrature();
    let mut worst: f64 = 0.0;
    for x in [-0.1, -0.5, -1.0, -3.0, -10.0] {
        let a = -x;
        let oracle = -q
            .integrate_with_breaks(|t: f64| (-t).exp() / t, &[a, a + 1.0, a + 10.0, a + 50.0, a + 750.0])
            .value;
        let v = specfun::exp_integral_ei(x)?;
        worst = worst.max(((v - oracle) / oracle).abs());
    }
    Ok(Check::upper("ei_vs_quadrature", 1e-10, worst, "max relative error over 5 points".into()))
}

fn psr_bd_closed_vs_quadrature(mutation: Option<Mutation>) -> Result<Check> {
    let q = quadrature();
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for k in 0..50 {
        let beta = 10f64.powf(-4.0 + 8.0 * k as f64 / 49.0);
        let oracle = q
            .integrate_with_breaks(
                |s: f64| (beta * s).ln_1p() * LOG2_E * (-s).exp(),
                &[0.0, 0.5, 2.0, 8.0, 32.0, 100.0, 800.0],
            )
            .value;
        let mut v = specfun::psr_bd_rate_closed(beta)?;
        if mutation == Some(Mutation::PsrBdRate) {
            v *= 1.0 + 1e-3;
        }
        if (v - oracle).abs() > worst {
            worst = (v - oracle).abs();
            at = beta;
        }
    }
    Ok(Check::upper(
        "psr_bd_closed_vs_quadrature",
        1e-7,
        worst,
        format!("max absolute error over 50 log-spaced β, worst at β={at:e}"),
    ))
}

fn ncx2_mass() -> Result<Check> {
    let mass = specfun::noncentral_chi2_cdf(400.0, 4.0, 1.0)?;
    Ok(Check::upper(
        "ncx2_pdf_mass",
        1e-8,
        (1.0 - mass).abs(),
        "|1 − ∫f| for λ=4, Σ=1".into(),
    ))
}

fn primary_snr_ks(seed: u64, mutation: Option<Mutation>) -> Result<Check> {
    const SAMPLES: usize = 100_000;
    let mut worst = f64::INFINITY;
    for k in 0..2u64 {
        let params = SystemParams {
            antennas: 2 + k as usize,
            transmit_power: 10.0,
            reflection: 0.5,
            spreading: 128,
            ..Default::default()
        };
        let ch = generate_channels(&params, -5.0, derive_seed(seed, 100 + k));
        let w: Vec<_> = ch.h1.iter().zip(&ch.h2).map(|(a, b)| a + b).collect();
        let n = norm_sqr(&w).sqrt();
        let w: Vec<_> = w.into_iter().map(|z| z / n).collect();
        let d = SnrDecomposition::of(&ch, &w, &params);
        let mut lambda = d.direct_snr;
        if mutation == Some(Mutation::Ncx2Pdf) {
            lambda *= 1.05;
        }
        let sigma = d.sigma();
        let mut samples = rates::simulate_primary_snr(&ch, &w, &params, SAMPLES, derive_seed(seed, 200 + k));
        let out = ks_test(&mut samples, 0.0, |x| {
            specfun::noncentral_chi2_pdf(x, lambda, sigma).unwrap_or(0.0)
        });
        worst = worst.min(out.p_value);
    }
    Ok(Check::lower(
        "primary_snr_ks",
        0.01,
        worst,
        format!("smallest KS p-value over 2 fixtures of {SAMPLES} samples"),
    ))
}

fn asymptotic_rate() -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut gain_positive = true;
    for lambda in [1e3, 1e4, 1e5] {
        let d = SnrDecomposition::new(lambda, lambda / 100.0)?;
        let exact = rates::csr_primary_rate_exact(&d).value;
        let approx = rates::csr_primary_rate_asymptotic(&d)?;
        worst = worst.max(((approx - exact) / exact).abs());
        gain_positive &= rates::csr_rate_gain(lambda, lambda / 100.0) > 0.0;
    }
    let mut c = Check::upper(
        "asymptotic_rate",
        0.01,
        worst,
        format!("max relative error for λ ∈ {{1e3, 1e4, 1e5}}, 2Σ = λ/100; gain positive: {gain_positive}"),
    );
    c.passed &= gain_positive;
    Ok(c)
}

fn reduced_basis_oracle(seed: u64, solver: &SolverConfig) -> Result<Check> {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..6u64 {
        let params = SystemParams {
            antennas: 2 + (k % 3) as usize,
            reflection: 0.5,
            ..Default::default()
        };
        let ch = generate_channels(&params, -10.0, derive_seed(seed, 300 + k));
        let reduced = brute_force_search(&ch, &params, Problem::WsrmPsr, solver)?;
        let full = full_space_search(&ch, &params, Problem::WsrmPsr, solver, 20_000, derive_seed(seed, 400 + k))?;
        worst = worst.max(full.objective - reduced.objective);
    }
    Ok(Check::upper(
        "reduced_basis_oracle",
        1e-3,
        worst,
        "max excess of 2e4-direction full-space search over the reduced grid, 6 instances".into(),
    ))
}

fn solver_vs_oracle(
    name: &'static str,
    problem: Problem,
    seed: u64,
    solver: &SolverConfig,
    mutation: Option<Mutation>,
) -> Result<Check> {
    let n = if matches!(problem, Problem::WsrmCsr | Problem::TpmCsr { .. }) { 128 } else { 1 };
    let mut worst: f64 = 0.0;
    for k in 0..4u64 {
        let params = SystemParams {
            antennas: 2,
            reflection: 0.5,
            spreading: n,
            ..Default::default()
        };
        let ch = generate_channels(&params, -10.0, derive_seed(seed, 500 + k));
        let mut s = match problem {
            Problem::WsrmPsr => solve_wsrm_psr(&ch, &params, solver)?,
            Problem::WsrmCsr => solve_wsrm_csr(&ch, &params, solver)?,
            Problem::TpmPsr { eps_s, eps_c } => solve_tpm_psr(&ch, eps_s, eps_c, &params, solver)?,
            Problem::TpmCsr { eps_s, eps_c } => solve_tpm_csr(&ch, eps_s, eps_c, &params, solver)?,
        };
        if mutation == Some(Mutation::SolverObjective) && problem == Problem::WsrmPsr {
            s.objective -= 0.01;
        }
        let b = brute_force_search(&ch, &params, problem, solver)?;
        let gap = if problem.minimizes() {
            s.objective / b.objective - 1.0
        } else {
            b.objective - s.objective
        };
        worst = worst.max(gap);
    }
    let (tol, unit) = if problem.minimizes() { (1e-3, "relative power") } else { (2e-3, "bits") };
    Ok(Check::upper(name, tol, worst, format!("max shortfall vs the grid oracle in {unit}, 4 instances")))
}

fn analytic_endpoints(seed: u64, solver: &SolverConfig) -> Result<Check> {
    let params = SystemParams {
        antennas: 3,
        reflection: 0.0,
        weight: 1.0,
        ..Default::default()
    };
    let ch = generate_channels(&params, -10.0, derive_seed(seed, 600));
    let h = norm_sqr(&ch.h1);
    let mrt = (params.transmit_power * h / params.noise_power).ln_1p() * LOG2_E;
    let w = solve_wsrm_psr(&ch, &params, solver)?;
    let t = solve_tpm_psr(&ch, 2.0, 0.0, &params, solver)?;
    let p = 3.0 * params.noise_power / h;
    let err = (w.objective - mrt).abs().max((t.objective / p - 1.0).abs());
    Ok(Check::upper(
        "analytic_endpoints",
        1e-9,
        err,
        "MRT rate at ρ=1, α=0 and the MISO minimum power at ε_c=0".into(),
    ))
}

fn randomization_power(seed: u64) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for (k, (p, r)) in [(1.0, [0.1, 0.2, -0.3]), (5.0, [0.0, 0.0, 0.0]), (0.3, [0.5, -0.5, 0.2])]
        .into_iter()
        .enumerate()
    {
        let a = Hermitian2::from_bloch(p, r);
        for v in randomized_candidates(&a, 1000, derive_seed(seed, 700 + k as u64)) {
            worst = worst.max(((v[0].norm_sqr() + v[1].norm_sqr()) / p - 1.0).abs());
        }
    }
    Ok(Check::upper(
        "randomization_power",
        1e-13,
        worst,
        "max relative deviation of ‖v‖² from Tr A over 3000 trials".into(),
    ))
}

/// Runs the suite with the config's seed and solver settings.
pub fn run_validation(cfg: &ExperimentConfig, mutation: Option<Mutation>) -> Result<ValidationReport> {
    cfg.validate()?;
    let seed = cfg.seed;
    let solver = &cfg.solver;
    let checks = vec![
        ei_vs_quadrature()?,
        psr_bd_closed_vs_quadrature(mutation)?,
        ncx2_mass()?,
        primary_snr_ks(seed, mutation)?,
        asymptotic_rate()?,
        reduced_basis_oracle(seed, solver)?,
        solver_vs_oracle("solver_vs_oracle_wsrm_psr", Problem::WsrmPsr, seed, solver, mutation)?,
        solver_vs_oracle("solver_vs_oracle_wsrm_csr", Problem::WsrmCsr, seed, solver, mutation)?,
        solver_vs_oracle(
            "solver_vs_oracle_tpm_psr",
            Problem::TpmPsr { eps_s: 2.0, eps_c: 0.5 },
            seed,
            solver,
            mutation,
        )?,
        solver_vs_oracle(
            "solver_vs_oracle_tpm_csr",
            Problem::TpmCsr { eps_s: 2.0, eps_c: 0.02 },
            seed,
            solver,
            mutation,
        )?,
        analytic_endpoints(seed, solver)?,
        randomization_power(seed)?,
    ];
    Ok(ValidationReport {
        version: crate::VERSION,
        seed,
        config_hash: config_hash(cfg),
        mutation,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
