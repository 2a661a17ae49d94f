//! Achievable rates and transmit beamforming for a multi-antenna symbiotic
//! radio, where a passive backscatter device (BD) rides on a primary
//! MISO link and the primary receiver decodes both streams.
//!
//! Two setups are covered. In the parasitic setup (PSR, spreading `N = 1`)
//! the BD symbol is as short as a primary symbol and acts as interference.
//! In the commensal setup (CSR, `N >> 1`) one BD symbol spans `N` primary
//! symbols and acts as an extra multipath component.
//!
//! Module map:
//!
//! - [`specfun`]: exponential integral, scaled `I0`, the noncentral
//!   chi-square density and adaptive Gauss-Kronrod quadrature.
//! - [`channel`]: scenario parameters, Rayleigh channel draws, beamformers
//!   and the JSON channel-ensemble format.
//! - [`rates`]: closed-form, quadrature and Monte Carlo rate evaluation.
//! - [`beamform`]: weighted sum-rate and transmit-power solvers built on a
//!   two-dimensional reduced basis, plus brute-force oracles.
//! - [`harness`]: experiment configuration, sweeps and the validation report
//!   behind the `symradio` CLI.

pub mod beamform;
pub mod channel;
pub mod error;
pub mod harness;
pub mod rates;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version embedded in every experiment output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
