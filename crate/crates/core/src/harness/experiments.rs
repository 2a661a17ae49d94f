//! The simulation studies: rate regions, SNR sweeps and power sweeps.
//!
//! Realizations are solved in parallel; each one gets its channel from
//! `derive_seed(seed, i)` and its solver seed from
//! `derive_seed(solver.seed, i)`, and results are combined in index order,
//! so outputs do not depend on scheduling.

use std::f64::consts::LOG2_E;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Scenario};
use super::output::{Cell, Table};
use crate::beamform::{
    full_space_refined, solve_tpm_csr, solve_tpm_psr, solve_wsrm_csr, solve_wsrm_psr, Problem,
    SolveReport, SolverConfig,
};
use crate::channel::{norm_sqr, ChannelEnsemble, ChannelRealization, SystemParams};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                count: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            count: n,
        }
    }
}

/// The channel realizations of a run: read from `cfg.channels` when set,
/// otherwise generated from `cfg.seed`.
pub fn load_channels(cfg: &ExperimentConfig) -> Result<Vec<ChannelRealization>> {
    let Some(path) = &cfg.channels else {
        let ens = ChannelEnsemble::generate(&cfg.params, cfg.delta_gamma_db, cfg.realizations, cfg.seed);
        return Ok(ens.realizations);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let ens = ChannelEnsemble::from_json(&text)?;
    if ens.antennas != cfg.params.antennas {
        return Err(Error::Config(format!(
            "channel file has {} antennas but params.antennas = {}",
            ens.antennas, cfg.params.antennas
        )));
    }
    if ens.realizations.len() < cfg.realizations {
        return Err(Error::Config(format!(
            "channel file has {} realizations, {} requested",
            ens.realizations.len(),
            cfg.realizations
        )));
    }
    Ok(ens.realizations.into_iter().take(cfg.realizations).collect())
}

fn solver_for(cfg: &ExperimentConfig, i: usize) -> SolverConfig {
    SolverConfig {
        seed: derive_seed(cfg.solver.seed, i as u64),
        ..cfg.solver
    }
}

fn solve_wsrm(ch: &ChannelRealization, p: &SystemParams, solver: &SolverConfig) -> Result<SolveReport> {
    if p.is_psr() {
        solve_wsrm_psr(ch, p, solver)
    } else {
        solve_wsrm_csr(ch, p, solver)
    }
}

fn solve_tpm(
    ch: &ChannelRealization,
    eps_s: f64,
    eps_c: f64,
    p: &SystemParams,
    solver: &SolverConfig,
) -> Result<Option<SolveReport>> {
    let r = if p.is_psr() {
        solve_tpm_psr(ch, eps_s, eps_c, p, solver)
    } else {
        solve_tpm_csr(ch, eps_s, eps_c, p, solver)
    };
    match r {
        Ok(r) => Ok(Some(r)),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs `f` on every realization in parallel and returns results in
/// realization order.
fn per_realization<T, F>(channels: &[ChannelRealization], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &ChannelRealization) -> Result<T> + Sync,
{
    channels
        .par_iter()
        .enumerate()
        .map(|(i, ch)| f(i, ch))
        .collect()
}

/// Columns: `kind` (`pareto` or `axis`), `rho`, `primary_rate`, `bd_rate`,
/// `primary_se`, `bd_se`, `realizations`.
///
/// One `pareto` row per weight, averaging the solved rate pairs; two `axis`
/// rows extend the `ρ = 1` and `ρ = 0` points to the axes. CSR primary
/// rates are evaluated by quadrature.
pub fn run_rate_region(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let channels = load_channels(cfg)?;
    let pairs: Vec<Vec<(f64, f64)>> = per_realization(&channels, |i, ch| {
        let solver = solver_for(cfg, i);
        cfg.rho_grid
            .iter()
            .map(|&rho| {
                let p = SystemParams {
                    weight: rho,
                    ..cfg.params
                };
                let r = solve_wsrm(ch, &p, &solver)?;
                Ok((r.rates.primary_rate, r.rates.bd_rate))
            })
            .collect()
    })?;
    let mut t = Table::new(&["kind", "rho", "primary_rate", "bd_rate", "primary_se", "bd_se", "realizations"]);
    let n = channels.len();
    let mut points = Vec::new();
    for (k, &rho) in cfg.rho_grid.iter().enumerate() {
        let rs: Vec<f64> = pairs.iter().map(|v| v[k].0).collect();
        let rc: Vec<f64> = pairs.iter().map(|v| v[k].1).collect();
        let (s, c) = (Summary::of(&rs), Summary::of(&rc));
        t.push(vec![
            "pareto".into(),
            rho.into(),
            s.mean.into(),
            c.mean.into(),
            s.std_error.into(),
            c.std_error.into(),
            n.into(),
        ]);
        points.push((rho, s.mean, c.mean));
    }
    let by_rho = |target: f64| points.iter().find(|p| p.0 == target).copied();
    if let Some((_, rs, _)) = by_rho(1.0) {
        t.push(vec!["axis".into(), 1.0.into(), rs.into(), 0.0.into(), 0.0.into(), 0.0.into(), n.into()]);
    }
    if let Some((_, _, rc)) = by_rho(0.0) {
        t.push(vec!["axis".into(), 0.0.into(), 0.0.into(), rc.into(), 0.0.into(), 0.0.into(), n.into()]);
    }
    Ok(t)
}

/// Method names of the SNR sweep, in output order.
pub const SNR_METHODS: [&str; 4] = ["PSR", "CSR", "CSR-LC", "MISO-baseline"];

/// Columns: `snr_db`, `method`, `primary_rate`, `bd_rate`, `sum_rate`,
/// `primary_se`, `bd_se`, `sum_se`.
///
/// Methods: `PSR` solves the parasitic problem (`N = 1`); `CSR` is the
/// conventional full-space design, computed by refined random search over
/// all of `C^M`; `CSR-LC` is the reduced-basis solver; `MISO-baseline` is
/// maximum-ratio transmission to the primary receiver without a BD.
pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let channels = load_channels(cfg)?;
    // [realization][snr][method] -> (R_s, R_c)
    let results: Vec<Vec<Vec<(f64, f64)>>> = per_realization(&channels, |i, ch| {
        let solver = solver_for(cfg, i);
        cfg.snr_grid
            .iter()
            .map(|&snr| {
                let csr = cfg.params.with_snr_db(snr);
                let psr = SystemParams { spreading: 1, ..csr };
                let a = solve_wsrm_psr(ch, &psr, &solver)?;
                let b = full_space_refined(
                    ch,
                    &csr,
                    Problem::WsrmCsr,
                    &solver,
                    cfg.reference_directions,
                    cfg.reference_starts,
                    derive_seed(solver.seed, 2),
                )?;
                let c = solve_wsrm(ch, &csr, &solver)?;
                let miso = (csr.transmit_power * norm_sqr(&ch.h1) / csr.noise_power).ln_1p() * LOG2_E;
                Ok(vec![
                    (a.rates.primary_rate, a.rates.bd_rate),
                    (b.rates.primary_rate, b.rates.bd_rate),
                    (c.rates.primary_rate, c.rates.bd_rate),
                    (miso, 0.0),
                ])
            })
            .collect()
    })?;
    let mut t = Table::new(&[
        "snr_db",
        "method",
        "primary_rate",
        "bd_rate",
        "sum_rate",
        "primary_se",
        "bd_se",
        "sum_se",
    ]);
    for (k, &snr) in cfg.snr_grid.iter().enumerate() {
        for (m, name) in SNR_METHODS.iter().enumerate() {
            let rs: Vec<f64> = results.iter().map(|r| r[k][m].0).collect();
            let rc: Vec<f64> = results.iter().map(|r| r[k][m].1).collect();
            let sum: Vec<f64> = rs.iter().zip(&rc).map(|(a, b)| a + b).collect();
            let (s, c, u) = (Summary::of(&rs), Summary::of(&rc), Summary::of(&sum));
            t.push(vec![
                snr.into(),
                (*name).into(),
                s.mean.into(),
                c.mean.into(),
                u.mean.into(),
                s.std_error.into(),
                c.std_error.into(),
                u.std_error.into(),
            ]);
        }
    }
    Ok(t)
}

/// Columns: `spreading`, `setup`, `eps_s`, `eps_c`, `min_power`,
/// `min_power_db`, `primary_rate`, `bd_rate`, `power_se`, `feasible`,
/// `infeasible`.
///
/// One row per spreading factor and grid value. Averages are over the
/// feasible realizations; `infeasible` counts the others, so no
/// realization is silently dropped. Setups with spreading > 1 take their
/// BD requirements from `csr_eps_c_grid` / `csr_eps_c`. `min_power_db` is `10 log10(p̄/σ²)`,
/// i.e. the transmit power in dBm relative to the noise power in dBm.
pub fn run_tpm_sweep(cfg: &ExperimentConfig) -> Result<Table> {
    cfg.validate()?;
    let channels = load_channels(cfg)?;
    // Grid of (ε_s, ε_c) pairs for a spreading factor.
    let points = |n: u32| -> Vec<(f64, f64)> {
        let (eps_c_grid, eps_c) = if n > 1 {
            (&cfg.csr_eps_c_grid, cfg.csr_eps_c)
        } else {
            (&cfg.eps_c_grid, cfg.eps_c)
        };
        match cfg.scenario {
            Scenario::TpmEpsSSweep => cfg.eps_s_grid.iter().map(|&s| (s, eps_c)).collect(),
            _ => eps_c_grid.iter().map(|&c| (cfg.eps_s, c)).collect(),
        }
    };
    let setups = &cfg.tpm_spreading;
    // [realization][setup][point] -> Option<(p, R_s, R_c)>
    type Solved = Vec<Vec<Option<(f64, f64, f64)>>>;
    let results: Vec<Solved> = per_realization(&channels, |i, ch| {
        let solver = solver_for(cfg, i);
        setups
            .iter()
            .map(|&n| {
                let p = SystemParams {
                    spreading: n,
                    ..cfg.params
                };
                points(n)
                    .into_iter()
                    .map(|(eps_s, eps_c)| {
                        Ok(solve_tpm(ch, eps_s, eps_c, &p, &solver)?
                            .map(|r| (r.power, r.rates.primary_rate, r.rates.bd_rate)))
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut t = Table::new(&[
        "spreading",
        "setup",
        "eps_s",
        "eps_c",
        "min_power",
        "min_power_db",
        "primary_rate",
        "bd_rate",
        "power_se",
        "feasible",
        "infeasible",
    ]);
    for (si, &n) in setups.iter().enumerate() {
        for (k, (eps_s, eps_c)) in points(n).into_iter().enumerate() {
            let ok: Vec<(f64, f64, f64)> = results.iter().filter_map(|r| r[si][k]).collect();
            let pw = Summary::of(&ok.iter().map(|x| x.0).collect::<Vec<_>>());
            let rs = Summary::of(&ok.iter().map(|x| x.1).collect::<Vec<_>>());
            let rc = Summary::of(&ok.iter().map(|x| x.2).collect::<Vec<_>>());
            t.push(vec![
                n.into(),
                if n == 1 { "PSR" } else { "CSR" }.into(),
                eps_s.into(),
                eps_c.into(),
                pw.mean.into(),
                (10.0 * (pw.mean / cfg.params.noise_power).log10()).into(),
                rs.mean.into(),
                rc.mean.into(),
                pw.std_error.into(),
                ok.len().into(),
                (channels.len() - ok.len()).into(),
            ]);
        }
    }
    Ok(t)
}

/// Runs the tabular scenario named in `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    match cfg.scenario {
        Scenario::RateRegion => run_rate_region(cfg),
        Scenario::SnrSweep => run_snr_sweep(cfg),
        Scenario::TpmEpsCSweep | Scenario::TpmEpsSSweep => run_tpm_sweep(cfg),
        Scenario::Validate => Err(Error::Config(
            "the validate scenario produces a report, not a table".into(),
        )),
    }
}

/// Row filter matching a text cell.
pub fn text_is<'a>(t: &Table, column: &str, value: &'a str) -> impl Fn(&[Cell]) -> bool + 'a {
    let k = t.column(column);
    move |row: &[Cell]| k.is_some_and(|k| matches!(&row[k], Cell::Text(s) if s == value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::for_scenario(scenario);
        cfg.realizations = 3;
        cfg
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).std_error, 0.0);
        assert!(Summary::of(&[]).mean.is_nan());
    }

    #[test]
    fn rate_region_endpoints() {
        let cfg = small(Scenario::RateRegion);
        let t = run_rate_region(&cfg).unwrap();
        assert_eq!(t.rows.len(), cfg.rho_grid.len() + 2);
        let pareto = text_is(&t, "kind", "pareto");
        let rs = t.floats("primary_rate", &pareto);
        let rc = t.floats("bd_rate", &pareto);
        let max_rs = rs.iter().cloned().fold(f64::MIN, f64::max);
        let max_rc = rc.iter().cloned().fold(f64::MIN, f64::max);
        assert!((rs[rs.len() - 1] - max_rs).abs() < 1e-9);
        assert!((rc[0] - max_rc).abs() < 1e-9);
    }

    #[test]
    fn tpm_sweep_flags_rows() {
        let mut cfg = small(Scenario::TpmEpsCSweep);
        cfg.eps_c_grid = vec![0.1, 0.5];
        cfg.tpm_spreading = vec![1];
        let t = run_tpm_sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        let feas = t.floats("feasible", |_| true);
        let inf = t.floats("infeasible", |_| true);
        for (a, b) in feas.iter().zip(&inf) {
            assert_eq!(a + b, 3.0);
        }
    }

    #[test]
    fn outputs_are_reproducible() {
        let mut cfg = small(Scenario::RateRegion);
        cfg.rho_grid = vec![0.0, 0.5, 1.0];
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    }
}
