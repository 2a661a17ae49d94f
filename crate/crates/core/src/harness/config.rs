//! Experiment configuration, loaded from JSON or TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beamform::SolverConfig;
use crate::channel::SystemParams;
use crate::error::{Error, Result};

/// Which study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RateRegion,
    SnrSweep,
    TpmEpsCSweep,
    TpmEpsSSweep,
    Validate,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::RateRegion => "rate_region",
            Scenario::SnrSweep => "snr_sweep",
            Scenario::TpmEpsCSweep => "tpm_eps_c_sweep",
            Scenario::TpmEpsSSweep => "tpm_eps_s_sweep",
            Scenario::Validate => "validate",
        }
    }
}

/// Realization count used by `--full`.
pub const FULL_REALIZATIONS: usize = 10_000;

/// Everything a run depends on. The whole struct is embedded in the output
/// header, so two runs with equal configs produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub params: SystemParams,
    /// Backscatter-to-direct link gain ratio in dB.
    pub delta_gamma_db: f64,
    pub realizations: usize,
    /// Weights for the rate region.
    pub rho_grid: Vec<f64>,
    /// Received SNR `p/σ²` in dB for the SNR sweep.
    pub snr_grid: Vec<f64>,
    /// BD rate requirements for the ε_c sweep, and the fixed ε_c of the
    /// ε_s sweep.
    pub eps_c_grid: Vec<f64>,
    pub eps_c: f64,
    /// The same two settings for setups with spreading > 1. The BD rate of
    /// those setups is per chip, so its SNR target `(2^{Nε_c} − 1)/N` grows
    /// exponentially in `N`, and useful requirements are far smaller.
    pub csr_eps_c_grid: Vec<f64>,
    pub csr_eps_c: f64,
    /// Primary rate requirements for the ε_s sweep, and the fixed ε_s of
    /// the ε_c sweep.
    pub eps_s_grid: Vec<f64>,
    pub eps_s: f64,
    /// Spreading factors compared by the power sweeps; `1` is PSR.
    pub tpm_spreading: Vec<u32>,
    /// Budget of the full-space reference search in the SNR sweep.
    pub reference_directions: usize,
    pub reference_starts: usize,
    /// Optional channel ensemble file used instead of generated channels.
    pub channels: Option<PathBuf>,
    pub solver: SolverConfig,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::RateRegion,
            params: SystemParams::default(),
            delta_gamma_db: -10.0,
            realizations: 200,
            rho_grid: uniform(0.0, 1.0, 21),
            snr_grid: uniform(0.0, 25.0, 6),
            eps_c_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            eps_c: 0.2,
            csr_eps_c_grid: vec![0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1],
            csr_eps_c: 0.02,
            eps_s_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0],
            eps_s: 2.0,
            tpm_spreading: vec![1, 128],
            reference_directions: 2000,
            reference_starts: 2,
            channels: None,
            solver: SolverConfig::default(),
            seed: 2024,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for a scenario, following the settings of the corresponding
    /// simulation study.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            ..Self::default()
        };
        match scenario {
            Scenario::RateRegion | Scenario::Validate => {}
            Scenario::SnrSweep => {
                cfg.params.antennas = 4;
                cfg.params.spreading = 128;
                cfg.params.weight = 0.5;
                cfg.delta_gamma_db = -20.0;
            }
            Scenario::TpmEpsCSweep | Scenario::TpmEpsSSweep => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.params
            .validate()
            .map_err(|e| Error::Config(format!("params: {e}")))?;
        self.solver
            .validate()
            .map_err(|e| Error::Config(format!("solver: {e}")))?;
        if self.realizations < 1 {
            return bad("realizations must be >= 1".into());
        }
        if !self.delta_gamma_db.is_finite() {
            return bad("delta_gamma_db must be finite".into());
        }
        let grids: [(&str, &[f64]); 5] = [
            ("rho_grid", &self.rho_grid),
            ("snr_grid", &self.snr_grid),
            ("eps_c_grid", &self.eps_c_grid),
            ("csr_eps_c_grid", &self.csr_eps_c_grid),
            ("eps_s_grid", &self.eps_s_grid),
        ];
        for (name, g) in grids {
            if g.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return bad(format!("{name} must be finite"));
            }
            if g.windows(2).any(|w| w[1] <= w[0]) {
                return bad(format!("{name} must be strictly increasing"));
            }
        }
        if self.rho_grid.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return bad("rho_grid values must lie in [0, 1]".into());
        }
        let nonneg = |x: f64| x >= 0.0;
        if !self.eps_c_grid.iter().all(|&x| nonneg(x))
            || !self.csr_eps_c_grid.iter().all(|&x| nonneg(x))
            || !self.eps_s_grid.iter().all(|&x| nonneg(x))
            || !nonneg(self.eps_c)
            || !nonneg(self.csr_eps_c)
            || !self.csr_eps_c.is_finite()
            || !nonneg(self.eps_s)
            || !self.eps_c.is_finite()
            || !self.eps_s.is_finite()
        {
            return bad("rate requirements must be finite and >= 0".into());
        }
        if self.tpm_spreading.is_empty() || self.tpm_spreading.contains(&0) {
            return bad("tpm_spreading must be a nonempty list of factors >= 1".into());
        }
        if self.reference_directions == 0 || self.reference_starts == 0 {
            return bad("reference search budget must be >= 1".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    /// Canonical JSON form, used for the output header and its hash.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
