//! Weighted sum-rate maximization.

use std::f64::consts::LOG2_E;

use crate::channel::{norm_sqr, Beamformer, ChannelRealization, SystemParams};
use crate::error::Result;
use crate::rates::{self, SaaDraws, SnrDecomposition};
use crate::rng::derive_seed;
use crate::specfun;

use super::basis::{reduce_basis, GainModel, ReducedBasis};
use super::hermitian::{
    add3, bloch_eigenvector, dot3, norm3, scale3, sub3, unit3, Hermitian2, Vec3,
};
use super::randomize::{best_candidate, randomized_candidates};
use super::search::{circle_max, golden_max};
use super::{
    achieved_rates, check_inputs, Extraction, Objective, Problem, SolveReport, SolveStats,
    SolverConfig, RANDOMIZATION_STREAM,
};

/// Optimum of the PSR relaxation at a fixed interference-plus-noise level.
#[derive(Debug, Clone, Copy)]
struct XiPoint {
    value: f64,
    r: Vec3,
}

/// Solves the PSR weighted sum-rate problem.
///
/// The interference-plus-noise level `ξ = α|g|²Tr(H2A) + σ²` is swept over
/// `xi_steps` log-spaced values in `[σ², αp|g|²‖h2‖² + σ²]`, and the best
/// level is refined by golden section. At fixed `ξ` the relaxation
/// maximizes `Tr(H1A)` over the slice of the Bloch ball where `Tr(H2A)` is
/// fixed: a disk whose optimum is the rim point in the direction of the
/// projected gain vector (rank one), or the disk centre when that
/// projection vanishes. A rank-one optimum gives the beamformer directly;
/// otherwise randomization picks the best of `rand_trials` candidates.
pub fn solve_wsrm_psr(
    ch: &ChannelRealization,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_inputs(ch, params, cfg)?;
    let rb = reduce_basis(ch, params.reflection)?;
    let m = rb.model();
    let g_sqr = ch.g.norm_sqr();
    let p = params.transmit_power;
    let s2 = params.noise_power;
    let rho = params.weight;
    let k2 = params.reflection * g_sqr;
    let mut stats = SolveStats::default();

    let inner = |xi: f64| -> XiPoint {
        let r = if k2 * p * m.c2 == 0.0 {
            unit3(m.v1).unwrap_or([0.0, 0.0, 1.0])
        } else {
            disk_optimum(&m, (xi - s2) / (k2 * p) - m.c2)
        };
        let x1 = (m.c1 + dot3(m.v1, r)).max(0.0);
        let beta = (xi - s2) / s2;
        let value = rho * (p * x1 / xi).ln_1p() * LOG2_E
            + (1.0 - rho) * specfun::psr_bd_rate_unchecked(beta.max(0.0));
        XiPoint { value, r }
    };

    let lo = s2;
    let hi = k2 * p * norm_sqr(&ch.h2) + s2;
    let best = if hi > lo {
        let n = cfg.xi_steps;
        let ratio = hi / lo;
        let grid: Vec<f64> = (0..n)
            .map(|k| {
                if k + 1 == n {
                    hi
                } else {
                    lo * ratio.powf(k as f64 / (n - 1) as f64)
                }
            })
            .collect();
        let mut best_k = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (k, &xi) in grid.iter().enumerate() {
            let v = inner(xi).value;
            if v > best_v {
                best_v = v;
                best_k = k;
            }
        }
        stats.grid_points = n;
        stats.evaluations += n;
        let a = grid[best_k.saturating_sub(1)];
        let b = grid[(best_k + 1).min(n - 1)];
        let (xi, v, evals) = golden_max(|x| inner(x).value, a, b, cfg.xi_refine_tol * (hi - lo));
        stats.evaluations += evals;
        stats.refinements += 1;
        let chosen = if v > best_v { xi } else { grid[best_k] };
        inner(chosen)
    } else {
        stats.evaluations += 1;
        inner(lo)
    };

    let relaxed = Hermitian2::from_bloch(p, best.r);
    let rank_ratio = relaxed.rank_ratio();
    let objective = Objective::new(Problem::WsrmPsr, params, g_sqr, None)?;
    let (u, extraction) = extract_max(&rb, &objective, &relaxed, rank_ratio, cfg, &mut stats);
    finish(ch, params, &rb, u, best.value, rank_ratio, extraction, stats, None)
}

/// Rim point of `{r : |r| ≤ 1, v2·r = target}` maximizing `v1·r`, or the
/// disk centre when `v1 ⟂` the disk.
fn disk_optimum(m: &GainModel, target: f64) -> Vec3 {
    let len2 = norm3(m.v2);
    let n2 = scale3(m.v2, 1.0 / len2);
    let t = (target / len2).clamp(-1.0, 1.0);
    let radius = (1.0 - t * t).max(0.0).sqrt();
    let perp = sub3(m.v1, scale3(n2, dot3(m.v1, n2)));
    let centre = scale3(n2, t);
    if norm3(perp) > 1e-12 * norm3(m.v1) {
        add3(centre, scale3(perp, radius / norm3(perp)))
    } else {
        centre
    }
}

/// Eigenvector extraction when rank one, otherwise best-of-`D`
/// randomization scored by `objective`.
fn extract_max(
    rb: &ReducedBasis,
    objective: &Objective,
    relaxed: &Hermitian2,
    rank_ratio: f64,
    cfg: &SolverConfig,
    stats: &mut SolveStats,
) -> ([crate::Complex64; 2], Extraction) {
    if rank_ratio <= cfg.rank_one_tol {
        return (relaxed.eigen().vectors[0], Extraction::Eigvec);
    }
    let p = relaxed.trace();
    let cands = randomized_candidates(
        relaxed,
        cfg.rand_trials,
        derive_seed(cfg.seed, RANDOMIZATION_STREAM),
    );
    stats.randomization_trials += cands.len();
    stats.evaluations += cands.len();
    let scale = 1.0 / p.sqrt();
    let (i, _) = best_candidate(&cands, |v| {
        let (x1, x2) = rb.gains([v[0] * scale, v[1] * scale]);
        objective.value(x1, x2)
    })
    .expect("at least one trial");
    let v = cands[i];
    ([v[0] * scale, v[1] * scale], Extraction::Randomized)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ch: &ChannelRealization,
    params: &SystemParams,
    rb: &ReducedBasis,
    u: [crate::Complex64; 2],
    sdr_bound: f64,
    rank_ratio: f64,
    extraction: Extraction,
    stats: SolveStats,
    draws: Option<&SaaDraws>,
) -> Result<SolveReport> {
    let w = Beamformer::canonical(rb.expand(u), ch)?;
    let rates = achieved_rates(ch, &w, params, params.transmit_power);
    let rho = params.weight;
    let (objective, exact) = match draws {
        None => {
            let v = rho * rates::psr_primary_rate(ch, w.as_slice(), params)
                + (1.0 - rho) * rates::psr_bd_rate(ch, w.as_slice(), params);
            (v, None)
        }
        Some(d) => {
            let decomp = SnrDecomposition::of(ch, w.as_slice(), params);
            let bd = rates::csr_bd_rate(ch, w.as_slice(), params);
            let saa = rho * d.rate(&decomp) + (1.0 - rho) * bd;
            (saa, Some(rho * rates.primary_rate + (1.0 - rho) * bd))
        }
    };
    Ok(SolveReport {
        w,
        objective,
        sdr_bound: sdr_bound.max(objective),
        rank_ratio,
        extraction,
        power: params.transmit_power,
        rates,
        exact_objective: exact,
        degenerate: rb.degenerate,
        stats,
    })
}

/// Relaxed CSR objective on the Bloch ball and its gradient.
struct CsrRelaxation<'a> {
    model: GainModel,
    draws: &'a SaaDraws,
    snr: f64,
    rho: f64,
    spreading: u32,
}

impl CsrRelaxation<'_> {
    fn eval(&self, r: Vec3) -> (f64, Vec3) {
        let m = &self.model;
        let (x1, x2) = m.gains(r);
        let (cross, dcross) = m.cross_magnitude(r);
        let a = self.snr * x1;
        let b = self.snr * m.kappa_sqr * x2;
        let kappa = m.kappa_sqr.sqrt();
        let d = (self.snr * kappa * cross).min((a * b).sqrt());
        let (rate, g) = self.draws.mean_rate_grad(a, b, d);
        let n = self.spreading as f64;
        let bd = rates::csr_bd_from_beta(self.spreading, b);
        let dbd_db = LOG2_E / (1.0 + n * b);
        let value = self.rho * rate + (1.0 - self.rho) * bd;
        let coef_b = self.rho * g[1] + (1.0 - self.rho) * dbd_db;
        let mut grad = scale3(m.v1, self.rho * g[0] * self.snr);
        grad = add3(grad, scale3(m.v2, coef_b * self.snr * m.kappa_sqr));
        grad = add3(grad, scale3(dcross, self.rho * g[2] * self.snr * kappa));
        (value, grad)
    }
}

fn project_ball(r: Vec3) -> Vec3 {
    let n = norm3(r);
    if n > 1.0 {
        scale3(r, 1.0 / n)
    } else {
        r
    }
}

/// Projected gradient ascent of a concave function over a convex set,
/// with backtracking. Returns the final point and value.
pub(super) fn projected_ascent<F, P>(f: F, project: P, start: Vec3, max_iter: usize) -> (Vec3, f64, usize)
where
    F: Fn(Vec3) -> (f64, Vec3),
    P: Fn(Vec3) -> Vec3,
{
    let mut r = project(start);
    let (mut v, mut g) = f(r);
    let mut step = 0.1 / norm3(g).max(1e-300);
    let mut iters = 0;
    for _ in 0..max_iter {
        iters += 1;
        let mut moved = false;
        while step * norm3(g) > 1e-15 {
            let cand = project(add3(r, scale3(g, step)));
            let (cv, cg) = f(cand);
            if cv > v {
                let delta = norm3(sub3(cand, r));
                r = cand;
                v = cv;
                g = cg;
                step *= 2.0;
                moved = delta > 1e-13;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (r, v, iters)
}

/// Solves the CSR weighted sum-rate problem.
///
/// The primary-rate expectation is a sample average over antithetic BD
/// draws, expressed through `(λ, 2Σ, |cross term|)` so that it depends on
/// the lifted matrix and not on arbitrary phases. The rank-one optimum is
/// found on the great circle bounding the gain region. Starting there,
/// projected gradient ascent over the Bloch ball solves the (concave)
/// relaxation; if it ends inside the ball the relaxed solution has rank
/// two and randomization is tried, keeping the better of the randomized
/// and rank-one beamformers.
pub fn solve_wsrm_csr(
    ch: &ChannelRealization,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_inputs(ch, params, cfg)?;
    let draws = cfg.draws();
    solve_wsrm_csr_with(ch, params, cfg, &draws)
}

pub(crate) fn solve_wsrm_csr_with(
    ch: &ChannelRealization,
    params: &SystemParams,
    cfg: &SolverConfig,
    draws: &SaaDraws,
) -> Result<SolveReport> {
    let rb = reduce_basis(ch, params.reflection)?;
    let m = rb.model();
    let g_sqr = ch.g.norm_sqr();
    let objective = Objective::new(Problem::WsrmCsr, params, g_sqr, Some(draws))?;
    let mut stats = SolveStats::default();

    let on_circle = |psi: f64| {
        let (x1, x2) = m.gains(m.circle(psi));
        objective.value(x1, x2)
    };
    let extras = [0.0, m.angle_of(unit3(m.v2).unwrap_or(m.n1))];
    let face = circle_max(on_circle, cfg.circle_steps, &extras);
    stats.grid_points = cfg.circle_steps;
    stats.evaluations += face.evaluations;
    stats.refinements += 1;
    let r_face = m.circle(face.angle);

    let relax = CsrRelaxation {
        model: m,
        draws,
        snr: params.transmit_power / params.noise_power,
        rho: params.weight,
        spreading: params.spreading,
    };
    let (r_rel, v_rel, iters) = projected_ascent(|r| relax.eval(r), project_ball, r_face, 2000);
    stats.evaluations += iters;
    let relaxed = Hermitian2::from_bloch(params.transmit_power, r_rel);
    let rank_ratio = relaxed.rank_ratio();

    let face_u = bloch_eigenvector(r_face);
    let (u, extraction) = if rank_ratio <= cfg.rank_one_tol {
        (face_u, Extraction::Eigvec)
    } else {
        let (cand, _) = extract_max(&rb, &objective, &relaxed, rank_ratio, cfg, &mut stats);
        let (x1, x2) = rb.gains(cand);
        if objective.value(x1, x2) > face.score {
            (cand, Extraction::Randomized)
        } else {
            (face_u, Extraction::Randomized)
        }
    };
    finish(
        ch,
        params,
        &rb,
        u,
        v_rel.max(face.score),
        rank_ratio,
        extraction,
        stats,
        Some(draws),
    )
}
