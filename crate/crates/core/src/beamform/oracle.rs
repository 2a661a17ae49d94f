//! Validation oracles: direct searches over beamforming directions.
//!
//! None of these use the relaxation. Every candidate is a full `M`-vector
//! scored through the public rate functions (or the per-direction minimal
//! power for power minimization), with the same SAA draws as the solvers
//! for CSR problems.
//!
//! * [`brute_force_search`] grids the reduced space
//!   `a = (√t, √(1−t)e^{jφ})`, `w = Ba/‖Ba‖`, then zooms in around the
//!   best grid point.
//! * [`full_space_search`] samples uniformly random unit vectors in `C^M`.
//! * [`full_space_refined`] polishes the best random samples by pattern
//!   search on the unit sphere.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::channel::{norm_sqr, Beamformer, ChannelRealization, SystemParams};
use crate::error::{Error, Result};
use crate::rates::{self, LinkGains, SaaDraws, SnrDecomposition};
use crate::rng::{derive_seed, Stream};
use crate::Complex64;

use super::basis::reduce_basis;
#[cfg(doc)]
use super::tpm::{min_power_csr, min_power_psr};
use super::{
    achieved_rates, check_inputs, Extraction, Objective, Problem, SolveReport, SolveStats, SolverConfig,
};

/// Scores full-space directions for one problem.
struct Scorer<'a> {
    ch: &'a ChannelRealization,
    params: &'a SystemParams,
    problem: Problem,
    draws: &'a SaaDraws,
    /// Per-direction minimal power, the same map as [`min_power_psr`] and
    /// [`min_power_csr`] with the rate targets converted once.
    power: Option<Objective<'a>>,
}

impl<'a> Scorer<'a> {
    fn new(
        ch: &'a ChannelRealization,
        params: &'a SystemParams,
        problem: Problem,
        draws: &'a SaaDraws,
    ) -> Result<Self> {
        let power = if problem.minimizes() {
            Some(Objective::new(problem, params, ch.g.norm_sqr(), Some(draws))?)
        } else {
            None
        };
        Ok(Self {
            ch,
            params,
            problem,
            draws,
            power,
        })
    }

    /// Rate or power of the unit vector `w`.
    fn value(&self, w: &[Complex64]) -> f64 {
        let (ch, p) = (self.ch, self.params);
        let rho = p.weight;
        match (&self.power, self.problem) {
            (Some(objective), _) => {
                let gains = LinkGains::of(ch, w);
                objective.value(gains.direct, gains.backscatter)
            }
            (None, Problem::WsrmPsr) => {
                rho * rates::psr_primary_rate(ch, w, p) + (1.0 - rho) * rates::psr_bd_rate(ch, w, p)
            }
            (None, _) => {
                rho * self.draws.rate(&SnrDecomposition::of(ch, w, p))
                    + (1.0 - rho) * rates::csr_bd_rate(ch, w, p)
            }
        }
    }

    /// Larger is better; NaN scores as worst.
    fn score(&self, w: &[Complex64]) -> f64 {
        let v = self.value(w);
        let s = if self.problem.minimizes() { -v } else { v };
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    }

    fn report(&self, w: Vec<Complex64>, score: f64, degenerate: bool, stats: SolveStats) -> Result<SolveReport> {
        if !score.is_finite() {
            return Err(Error::Infeasible(
                "no searched direction meets the rate targets".into(),
            ));
        }
        let w = Beamformer::canonical(w, self.ch)?;
        let objective = self.value(w.as_slice());
        let power = if self.problem.minimizes() {
            objective
        } else {
            self.params.transmit_power
        };
        let rates = achieved_rates(self.ch, &w, self.params, power);
        let exact_objective = match self.problem {
            Problem::WsrmCsr => {
                let rho = self.params.weight;
                Some(rho * rates.primary_rate + (1.0 - rho) * rates.bd_rate)
            }
            _ => None,
        };
        Ok(SolveReport {
            w,
            objective,
            sdr_bound: objective,
            rank_ratio: 0.0,
            extraction: Extraction::Search,
            power,
            rates,
            exact_objective,
            degenerate,
            stats,
        })
    }
}

fn collinear(ch: &ChannelRealization) -> bool {
    reduce_basis(ch, 0.0).map(|rb| rb.degenerate).unwrap_or(false)
}

const ZOOM_STARTS: usize = 3;
const ZOOM_ROUNDS: usize = 18;
const ZOOM_WIDTH: f64 = 0.15;

/// Reduced-space grid oracle.
///
/// Scores `a(t, φ)` on `t_i = i/(grid_t − 1)`, `φ_j = 2πj/grid_phi`; ties go
/// to the smallest `t`, then the smallest `φ`. The best few grid points are
/// then refined by rounds of 9×9 local grids in a tangent chart around the
/// current point, each a third the width of the previous one.
///
/// For power minimization the report's `objective` is the least power over
/// the searched directions; `sdr_bound` equals `objective` (there is no
/// relaxation). Fails with [`Error::Infeasible`] when no direction meets
/// the targets.
pub fn brute_force_search(
    ch: &ChannelRealization,
    params: &SystemParams,
    problem: Problem,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_inputs(ch, params, cfg)?;
    let rb = reduce_basis(ch, params.reflection)?;
    let draws = cfg.draws();
    let scorer = Scorer::new(ch, params, problem, &draws)?;
    let direction = |a: [Complex64; 2]| -> Option<Vec<Complex64>> {
        let v = rb.expand_coefficients(a);
        let n = norm_sqr(&v).sqrt();
        (n > 1e-12).then(|| v.into_iter().map(|z| z / n).collect())
    };
    let eval = |a: [Complex64; 2]| direction(a).map_or(f64::NEG_INFINITY, |w| scorer.score(&w));

    let (nt, nphi) = (cfg.grid_t, cfg.grid_phi);
    let grid_point = |k: usize| {
        let t = (k / nphi) as f64 / (nt - 1) as f64;
        let phi = TAU * (k % nphi) as f64 / nphi as f64;
        [Complex64::new(t.sqrt(), 0.0), Complex64::from_polar((1.0 - t).sqrt(), phi)]
    };
    let scores: Vec<f64> = (0..nt * nphi).into_par_iter().map(|k| eval(grid_point(k))).collect();
    let mut stats = SolveStats {
        grid_points: nt * nphi,
        evaluations: nt * nphi,
        ..Default::default()
    };
    // The rows t = 0 and t = 1 are single directions; keep only φ = 0 there
    // so that the starts below are distinct.
    let distinct = |k: usize| k.is_multiple_of(nphi) || (k / nphi != 0 && k / nphi != nt - 1);
    let mut order: Vec<usize> = (0..nt * nphi).filter(|&k| distinct(k)).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));

    // Zoom in on the best few grid points in the tangent chart
    // a = a* + (x + jy) a*⊥, which is regular everywhere, unlike (t, φ).
    const SIDE: usize = 9;
    let mut best = (grid_point(order[0]), scores[order[0]]);
    for &k in order.iter().take(ZOOM_STARTS) {
        let mut here = (grid_point(k), scores[k]);
        if !here.1.is_finite() {
            continue;
        }
        let mut h = ZOOM_WIDTH;
        for _ in 0..ZOOM_ROUNDS {
            let a = here.0;
            let perp = [-a[1].conj(), a[0].conj()];
            let local: Vec<([Complex64; 2], f64)> = (0..SIDE * SIDE)
                .into_par_iter()
                .map(|i| {
                    let off = |i: usize| h * ((i as f64 / (SIDE - 1) as f64) * 2.0 - 1.0);
                    let z = Complex64::new(off(i / SIDE), off(i % SIDE));
                    let c = [a[0] + z * perp[0], a[1] + z * perp[1]];
                    let n = (c[0].norm_sqr() + c[1].norm_sqr()).sqrt();
                    let c = [c[0] / n, c[1] / n];
                    (c, eval(c))
                })
                .collect();
            for (c, s) in local {
                if s > here.1 {
                    here = (c, s);
                }
            }
            stats.evaluations += SIDE * SIDE;
            stats.refinements += 1;
            h /= 3.0;
        }
        if here.1 > best.1 {
            best = here;
        }
    }
    let w = direction(best.0).unwrap_or_else(|| rb.q[0].clone());
    scorer.report(w, best.1, rb.degenerate, stats)
}

fn random_unit(stream: &mut Stream, m: usize) -> Vec<Complex64> {
    loop {
        let v = stream.cn_vec(m);
        let n = norm_sqr(&v).sqrt();
        if n > 1e-300 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

const CHUNK: usize = 4096;

/// Scores of `directions` random unit vectors, best first by chunk order.
fn sample_best(scorer: &Scorer, m: usize, directions: usize, seed: u64, keep: usize) -> Vec<(f64, Vec<Complex64>)> {
    let chunks = directions.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<(f64, Vec<Complex64>)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = Stream::new(derive_seed(seed, c as u64));
            let n = CHUNK.min(directions - c * CHUNK);
            let mut top: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(keep + 1);
            for _ in 0..n {
                let w = random_unit(&mut stream, m);
                let s = scorer.score(&w);
                insert_top(&mut top, (s, w), keep);
            }
            top
        })
        .collect();
    let mut top = Vec::with_capacity(keep + 1);
    for chunk in per_chunk {
        for item in chunk {
            insert_top(&mut top, item, keep);
        }
    }
    top
}

/// Keeps the `keep` highest scores, earlier entries winning ties.
fn insert_top(top: &mut Vec<(f64, Vec<Complex64>)>, item: (f64, Vec<Complex64>), keep: usize) {
    let pos = top.iter().position(|(s, _)| item.0 > *s).unwrap_or(top.len());
    if pos < keep {
        top.insert(pos, item);
        top.truncate(keep);
    }
}

/// Full-space random-direction oracle: best of `directions` uniformly
/// distributed unit vectors in `C^M`. Deterministic in `seed` and
/// independent of the thread count.
pub fn full_space_search(
    ch: &ChannelRealization,
    params: &SystemParams,
    problem: Problem,
    cfg: &SolverConfig,
    directions: usize,
    seed: u64,
) -> Result<SolveReport> {
    check_inputs(ch, params, cfg)?;
    if directions == 0 {
        return Err(Error::InvalidParams("directions must be >= 1".into()));
    }
    let draws = cfg.draws();
    let scorer = Scorer::new(ch, params, problem, &draws)?;
    let top = sample_best(&scorer, ch.antennas(), directions, seed, 1);
    let stats = SolveStats {
        evaluations: directions,
        grid_points: directions,
        ..Default::default()
    };
    let (s, w) = top.into_iter().next().expect("at least one direction");
    scorer.report(w, s, collinear(ch), stats)
}

/// Pattern search on the unit sphere from `w`: tries `±δ` along every real
/// coordinate of `C^M` and a few random directions, halving `δ` after a
/// full round without improvement.
fn pattern_search(scorer: &Scorer, mut w: Vec<Complex64>, mut best: f64, seed: u64) -> (f64, Vec<Complex64>, usize) {
    let m = w.len();
    let mut stream = Stream::new(seed);
    let mut delta = 0.1;
    let mut evals = 0;
    let step = |w: &[Complex64], d: &[Complex64], delta: f64| -> Vec<Complex64> {
        let v: Vec<Complex64> = w.iter().zip(d).map(|(a, b)| a + b * delta).collect();
        let n = norm_sqr(&v).sqrt();
        v.into_iter().map(|z| z / n).collect()
    };
    while delta >= 1e-10 && evals < 200_000 {
        let mut moves: Vec<Vec<Complex64>> = Vec::with_capacity(4 * m + 4);
        for k in 0..m {
            for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                for sign in [1.0, -1.0] {
                    let mut d = vec![Complex64::new(0.0, 0.0); m];
                    d[k] = unit * sign;
                    moves.push(d);
                }
            }
        }
        for _ in 0..4 {
            moves.push(random_unit(&mut stream, m));
        }
        let mut improved = false;
        for d in &moves {
            let cand = step(&w, d, delta);
            let s = scorer.score(&cand);
            evals += 1;
            if s > best {
                best = s;
                w = cand;
                improved = true;
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }
    (best, w, evals)
}

/// Random search followed by pattern-search refinement of the best
/// `starts` samples. Much closer to the true full-space optimum than
/// [`full_space_search`] at the same sample count.
pub fn full_space_refined(
    ch: &ChannelRealization,
    params: &SystemParams,
    problem: Problem,
    cfg: &SolverConfig,
    directions: usize,
    starts: usize,
    seed: u64,
) -> Result<SolveReport> {
    check_inputs(ch, params, cfg)?;
    if directions == 0 || starts == 0 {
        return Err(Error::InvalidParams("directions and starts must be >= 1".into()));
    }
    let draws = cfg.draws();
    let scorer = Scorer::new(ch, params, problem, &draws)?;
    let top = sample_best(&scorer, ch.antennas(), directions, seed, starts);
    let polished: Vec<(f64, Vec<Complex64>, usize)> = top
        .into_par_iter()
        .enumerate()
        .map(|(i, (s, w))| {
            if s.is_finite() {
                pattern_search(&scorer, w, s, derive_seed(seed ^ 0x9e37_79b9, i as u64))
            } else {
                (s, w, 0)
            }
        })
        .collect();
    let mut stats = SolveStats {
        evaluations: directions,
        grid_points: directions,
        refinements: polished.len(),
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for (s, w, n) in polished {
        stats.evaluations += n;
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, w));
        }
    }
    let (s, w) = best.expect("at least one start");
    scorer.report(w, s, collinear(ch), stats)
}
