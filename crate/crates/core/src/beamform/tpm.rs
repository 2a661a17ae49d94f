//! Transmit power minimization under primary and BD rate targets.

use crate::channel::{Beamformer, ChannelRealization, SystemParams};
use crate::error::{Error, Result};
use crate::rates::{LinkGains, SaaDraws};
use crate::rng::derive_seed;
use crate::Complex64;

use super::basis::{reduce_basis, GainModel, ReducedBasis};
use super::hermitian::{add3, bloch_eigenvector, dot3, norm3, scale3, sub3, unit3, Hermitian2, Vec3};
use super::randomize::{first_feasible, randomized_candidates};
use super::search::{circle_max, CircleOptimum};
use super::wsrm::projected_ascent;
use super::{
    achieved_rates, check_inputs, Extraction, Objective, Problem, SolveReport, SolveStats,
    SolverConfig, RANDOMIZATION_STREAM,
};

/// Minimum PSR power for the unit beamformer `w`:
/// `max(γ_β σ²/(α|g|²x2), τσ²/(x1 − τα|g|²x2))` with `τ = 2^{ε_s} − 1`,
/// infinite when the SINR target is unreachable in that direction.
pub fn min_power_psr(
    ch: &ChannelRealization,
    w: &[Complex64],
    eps_s: f64,
    eps_c: f64,
    params: &SystemParams,
) -> Result<f64> {
    let obj = Objective::new(Problem::TpmPsr { eps_s, eps_c }, params, ch.g.norm_sqr(), None)?;
    let gains = LinkGains::of(ch, w);
    Ok(obj.value(gains.direct, gains.backscatter))
}

/// Minimum CSR power for the unit beamformer `w`, with the primary-rate
/// expectation taken over `draws`.
pub fn min_power_csr(
    ch: &ChannelRealization,
    w: &[Complex64],
    eps_s: f64,
    eps_c: f64,
    params: &SystemParams,
    draws: &SaaDraws,
) -> Result<f64> {
    let obj = Objective::new(
        Problem::TpmCsr { eps_s, eps_c },
        params,
        ch.g.norm_sqr(),
        Some(draws),
    )?;
    let gains = LinkGains::of(ch, w);
    Ok(obj.value(gains.direct, gains.backscatter))
}

/// Minimizes the per-direction power over the rank-one great circle.
fn face_search(m: &GainModel, objective: &Objective, steps: usize) -> CircleOptimum {
    let extras = [0.0, m.angle_of(unit3(m.v2).unwrap_or(m.n1))];
    circle_max(
        |psi| {
            let (x1, x2) = m.gains(m.circle(psi));
            objective.score(objective.value(x1, x2))
        },
        steps,
        &extras,
    )
}

fn infeasible(eps_s: f64, eps_c: f64) -> Error {
    Error::Infeasible(format!(
        "no direction meets ε_s={eps_s}, ε_c={eps_c}; the direct-to-backscatter gain ratio \
         must exceed 2^ε_s − 1 with positive margin in some direction"
    ))
}

fn validate_targets(eps_s: f64, eps_c: f64) -> Result<()> {
    let ok = |x: f64| x.is_finite() && x >= 0.0;
    if !ok(eps_s) || !ok(eps_c) {
        return Err(Error::InvalidParams(format!(
            "rate targets must be finite and >= 0, got ε_s={eps_s}, ε_c={eps_c}"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn report(
    ch: &ChannelRealization,
    params: &SystemParams,
    rb: &ReducedBasis,
    u: [Complex64; 2],
    power: f64,
    sdr_bound: f64,
    rank_ratio: f64,
    extraction: Extraction,
    stats: SolveStats,
) -> Result<SolveReport> {
    let w = Beamformer::canonical(rb.expand(u), ch)?;
    let rates = achieved_rates(ch, &w, params, power);
    Ok(SolveReport {
        w,
        objective: power,
        sdr_bound: sdr_bound.min(power),
        rank_ratio,
        extraction,
        power,
        rates,
        exact_objective: None,
        degenerate: rb.degenerate,
        stats,
    })
}

/// Solves the PSR power minimization problem.
///
/// Both constraints are linear in `A` once the BD target is converted to an
/// SNR, so the minimal power in a direction has a closed form (see
/// [`min_power_psr`]). The relaxation's optimum lies on the boundary of the
/// gain region, i.e. on the rank-one great circle, and is found by a 1-D
/// search. When the two gain vectors are aligned in the Bloch ball the
/// relaxed optimum is a whole disk; its centre is reported (rank two) and
/// the beamformer comes from randomization, stopping at the first trial
/// that is feasible at the relaxed power.
pub fn solve_tpm_psr(
    ch: &ChannelRealization,
    eps_s: f64,
    eps_c: f64,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_inputs(ch, params, cfg)?;
    validate_targets(eps_s, eps_c)?;
    let rb = reduce_basis(ch, params.reflection)?;
    let m = rb.model();
    let objective = Objective::new(Problem::TpmPsr { eps_s, eps_c }, params, ch.g.norm_sqr(), None)?;
    let mut stats = SolveStats::default();
    let face = face_search(&m, &objective, cfg.circle_steps);
    stats.grid_points = cfg.circle_steps;
    stats.evaluations += face.evaluations;
    stats.refinements += 1;
    let power = -face.score;
    if !power.is_finite() {
        return Err(infeasible(eps_s, eps_c));
    }
    let r_face = m.circle(face.angle);
    if !m.aligned || power == 0.0 {
        let u = bloch_eigenvector(r_face);
        return report(ch, params, &rb, u, power, power, 0.0, Extraction::Eigvec, stats);
    }
    // Gains depend on r only through n1·r: the optimal set is the disk
    // {n1·r = s}. Take its centre as the relaxed solution.
    let s = dot3(m.n1, r_face);
    let centre = scale3(m.n1, s);
    let relaxed = Hermitian2::from_bloch(power, centre);
    let rank_ratio = relaxed.rank_ratio();
    if rank_ratio <= cfg.rank_one_tol {
        let u = bloch_eigenvector(r_face);
        return report(ch, params, &rb, u, power, power, rank_ratio, Extraction::Eigvec, stats);
    }
    let cands = randomized_candidates(
        &relaxed,
        cfg.rand_trials,
        derive_seed(cfg.seed, RANDOMIZATION_STREAM),
    );
    let scale = 1.0 / power.sqrt();
    let mut tried = 0;
    let hit = first_feasible(&cands, |v| {
        tried += 1;
        let (x1, x2) = rb.gains([v[0] * scale, v[1] * scale]);
        objective.value(x1, x2) <= power * (1.0 + 1e-9)
    });
    stats.randomization_trials += tried;
    stats.evaluations += tried;
    let u = match hit {
        Some(i) => [cands[i][0] * scale, cands[i][1] * scale],
        None => bloch_eigenvector(r_face),
    };
    report(ch, params, &rb, u, power, power, rank_ratio, Extraction::Randomized, stats)
}

/// Projection onto `{|r| ≤ 1} ∩ {n·r ≥ t}` for a unit normal `n`.
fn project_ball_halfspace(r: Vec3, n: Vec3, t: f64) -> Vec3 {
    let inside = |x: Vec3| norm3(x) <= 1.0 + 1e-15 && dot3(n, x) >= t - 1e-15;
    if inside(r) {
        return r;
    }
    let len = norm3(r);
    if len > 1.0 {
        let b = scale3(r, 1.0 / len);
        if dot3(n, b) >= t {
            return b;
        }
    }
    let h = add3(r, scale3(n, t - dot3(n, r)));
    if norm3(h) <= 1.0 {
        return h;
    }
    // Both constraints active: nearest point of the circle {|r| = 1, n·r = t}.
    let centre = scale3(n, t);
    let radius = (1.0 - t * t).max(0.0).sqrt();
    let perp = sub3(r, scale3(n, dot3(n, r)));
    match unit3(perp) {
        Some(d) => add3(centre, scale3(d, radius)),
        None => centre,
    }
}

/// Relaxed CSR primary rate at power `p` over the Bloch ball.
struct TpmRelaxation<'a> {
    model: GainModel,
    draws: &'a SaaDraws,
    s2: f64,
}

impl TpmRelaxation<'_> {
    fn eval(&self, p: f64, r: Vec3) -> (f64, Vec3) {
        let m = &self.model;
        let (x1, x2) = m.gains(r);
        let (cross, dcross) = m.cross_magnitude(r);
        let snr = p / self.s2;
        let kappa = m.kappa_sqr.sqrt();
        let a = snr * x1;
        let b = snr * m.kappa_sqr * x2;
        let d = (snr * kappa * cross).min((a * b).sqrt());
        let (v, g) = self.draws.mean_rate_grad(a, b, d);
        let mut grad = scale3(m.v1, g[0] * snr);
        grad = add3(grad, scale3(m.v2, g[1] * snr * m.kappa_sqr));
        grad = add3(grad, scale3(dcross, g[2] * snr * kappa));
        (v, grad)
    }

    /// Best relaxed rate at power `p` subject to the BD constraint, or
    /// `None` when the BD constraint alone is infeasible.
    fn best_rate(&self, p: f64, bd_snr: f64, start: Vec3) -> Option<(Vec3, f64)> {
        let m = &self.model;
        let len2 = norm3(m.v2);
        let n = unit3(m.v2).unwrap_or(m.n1);
        // α|g|² p (c2 + v2·r)/σ² ≥ bd_snr
        let t = if bd_snr == 0.0 {
            -1.0
        } else if m.kappa_sqr * p == 0.0 || len2 == 0.0 {
            return None;
        } else {
            (bd_snr * self.s2 / (m.kappa_sqr * p) - m.c2) / len2
        };
        if t > 1.0 {
            return None;
        }
        let t = t.max(-1.0);
        let (r, v, _) = projected_ascent(
            |r| self.eval(p, r),
            |r| project_ball_halfspace(r, n, t),
            start,
            400,
        );
        Some((r, v))
    }
}

/// Solves the CSR power minimization problem.
///
/// For a fixed direction the BD constraint is linear in `p` and the
/// sample-average primary rate is increasing in `p`, so the minimal power
/// is a 1-D root (see [`min_power_csr`]); it is minimized over the rank-one
/// great circle. The relaxation is solved by bisection on `p`: a power is
/// relaxed-feasible when the concave relaxed rate, maximized over the
/// Bloch ball cut by the BD half-space, reaches `ε_s`. A rank-two relaxed
/// solution triggers randomization; each trial is scored by its own
/// minimal power (at the relaxed power itself no rank-one trial can be
/// feasible when the relaxed power is strictly lower), and the best of the
/// trials and the rank-one optimum is returned.
pub fn solve_tpm_csr(
    ch: &ChannelRealization,
    eps_s: f64,
    eps_c: f64,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_inputs(ch, params, cfg)?;
    validate_targets(eps_s, eps_c)?;
    let draws = cfg.draws();
    solve_tpm_csr_with(ch, eps_s, eps_c, params, cfg, &draws)
}

pub(crate) fn solve_tpm_csr_with(
    ch: &ChannelRealization,
    eps_s: f64,
    eps_c: f64,
    params: &SystemParams,
    cfg: &SolverConfig,
    draws: &SaaDraws,
) -> Result<SolveReport> {
    let rb = reduce_basis(ch, params.reflection)?;
    let m = rb.model();
    let problem = Problem::TpmCsr { eps_s, eps_c };
    let objective = Objective::new(problem, params, ch.g.norm_sqr(), Some(draws))?;
    let mut stats = SolveStats::default();
    let face = face_search(&m, &objective, cfg.circle_steps);
    stats.grid_points = cfg.circle_steps;
    stats.evaluations += face.evaluations;
    stats.refinements += 1;
    let power = -face.score;
    if !power.is_finite() {
        return Err(infeasible(eps_s, eps_c));
    }
    let r_face = m.circle(face.angle);
    let face_u = bloch_eigenvector(r_face);
    if power == 0.0 {
        return report(ch, params, &rb, face_u, 0.0, 0.0, 0.0, Extraction::Eigvec, stats);
    }

    let relax = TpmRelaxation {
        model: m,
        draws,
        s2: params.noise_power,
    };
    let bd_snr = objective.bd_snr_target;
    let feasible = |p: f64, start: Vec3| {
        relax
            .best_rate(p, bd_snr, start)
            .filter(|(_, v)| *v >= eps_s)
            .map(|(r, _)| r)
    };
    let mut hi = power;
    let mut r_hi = r_face;
    let mut lo = 0.5 * power;
    let mut halvings = 0;
    while let Some(r) = feasible(lo, r_hi) {
        hi = lo;
        r_hi = r;
        lo *= 0.5;
        halvings += 1;
        if halvings > 60 {
            break;
        }
    }
    for _ in 0..60 {
        if hi / lo - 1.0 < 1e-9 {
            break;
        }
        let mid = (lo * hi).sqrt();
        match feasible(mid, r_hi) {
            Some(r) => {
                hi = mid;
                r_hi = r;
            }
            None => lo = mid,
        }
        stats.evaluations += 1;
    }
    let relaxed = Hermitian2::from_bloch(hi, r_hi);
    let rank_ratio = relaxed.rank_ratio();
    if rank_ratio <= cfg.rank_one_tol {
        return report(ch, params, &rb, face_u, power, hi, rank_ratio, Extraction::Eigvec, stats);
    }
    let cands = randomized_candidates(
        &relaxed,
        cfg.rand_trials,
        derive_seed(cfg.seed, RANDOMIZATION_STREAM),
    );
    stats.randomization_trials += cands.len();
    stats.evaluations += cands.len();
    let scale = 1.0 / hi.sqrt();
    let mut best_u = face_u;
    let mut best_p = power;
    for v in &cands {
        let u = [v[0] * scale, v[1] * scale];
        let (x1, x2) = rb.gains(u);
        let p = objective.value(x1, x2);
        if p < best_p {
            best_p = p;
            best_u = u;
        }
    }
    report(ch, params, &rb, best_u, best_p, hi, rank_ratio, Extraction::Randomized, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, inner, norm_sqr};
    use crate::rates::{csr_bd_rate, invert_psr_bd_rate, psr_bd_rate, psr_primary_rate};

    fn params(m: usize, alpha: f64, n: u32) -> SystemParams {
        SystemParams {
            antennas: m,
            transmit_power: 1.0,
            noise_power: 1.0,
            reflection: alpha,
            spreading: n,
            weight: 0.5,
        }
    }

    fn at_power(p: &SystemParams, power: f64) -> SystemParams {
        SystemParams {
            transmit_power: power,
            ..*p
        }
    }

    #[test]
    fn psr_mrt_power() {
        let p = params(3, 0.0, 1);
        let ch = generate_channels(&p, -10.0, 2);
        let r = solve_tpm_psr(&ch, 2.0, 0.0, &p, &SolverConfig::default()).unwrap();
        let expect = 3.0 / norm_sqr(&ch.h1);
        assert!((r.objective / expect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psr_bd_only_power() {
        let p = params(3, 0.4, 1);
        let ch = generate_channels(&p, -10.0, 3);
        let r = solve_tpm_psr(&ch, 0.0, 0.7, &p, &SolverConfig::default()).unwrap();
        let gamma = invert_psr_bd_rate(0.7).unwrap();
        let expect = gamma / (0.4 * ch.g.norm_sqr() * norm_sqr(&ch.h2));
        assert!((r.objective / expect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psr_closed_form_matches_bisection() {
        let p = params(2, 0.3, 1);
        let ch = generate_channels(&p, -10.0, 8);
        let w = Beamformer::new(vec![Complex64::new(0.4, 0.2), Complex64::new(-0.1, 0.9)]).unwrap();
        let (eps_s, eps_c) = (1.5, 0.4);
        let closed = min_power_psr(&ch, w.as_slice(), eps_s, eps_c, &p).unwrap();
        let ok = |q: f64| {
            let at = at_power(&p, q);
            psr_primary_rate(&ch, w.as_slice(), &at) >= eps_s && psr_bd_rate(&ch, w.as_slice(), &at) >= eps_c
        };
        let (mut lo, mut hi) = (1e-6_f64, 1e6);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if ok(mid) {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert!((closed / hi - 1.0).abs() < 1e-9, "{closed} vs {hi}");
    }

    #[test]
    fn psr_solution_meets_targets() {
        let p = params(2, 0.5, 1);
        for seed in 0..5 {
            let ch = generate_channels(&p, -10.0, seed);
            let r = solve_tpm_psr(&ch, 2.0, 0.5, &p, &SolverConfig::default()).unwrap();
            assert!(r.rates.primary_rate >= 2.0 - 1e-9);
            assert!(r.rates.bd_rate >= 0.5 - 1e-9);
        }
    }

    #[test]
    fn psr_collinear_channels_are_handled() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let h = vec![c(1.0, 0.5), c(-0.3, 0.2)];
        let p = params(2, 0.5, 1);
        let weak = ChannelRealization {
            h1: h.clone(),
            h2: h.iter().map(|z| z * 0.1).collect(),
            g: c(1.0, 0.0),
        };
        let r = solve_tpm_psr(&weak, 1.0, 0.1, &p, &SolverConfig::default()).unwrap();
        assert!(r.degenerate);
        let strong = ChannelRealization {
            h1: h.clone(),
            h2: h.iter().map(|z| z * 3.0).collect(),
            g: c(1.0, 0.0),
        };
        let err = solve_tpm_psr(&strong, 3.0, 0.1, &p, &SolverConfig::default());
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn psr_orthogonal_channels_end_early() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let ch = ChannelRealization {
            h1: vec![c(1.0, 0.0), c(0.0, 0.0)],
            h2: vec![c(0.0, 0.0), c(2.0, 0.0)],
            g: c(1.0, 0.0),
        };
        let p = params(2, 0.3, 1);
        let r = solve_tpm_psr(&ch, 1.0, 0.5, &p, &SolverConfig::default()).unwrap();
        assert_eq!(r.extraction, Extraction::Randomized);
        assert_eq!(r.stats.randomization_trials, 1);
        assert!(r.rates.primary_rate >= 1.0 - 1e-9 && r.rates.bd_rate >= 0.5 - 1e-9);
    }

    #[test]
    fn csr_without_reflection_is_mrt() {
        let p = params(3, 0.0, 16);
        let ch = generate_channels(&p, -20.0, 4);
        let r = solve_tpm_csr(&ch, 2.0, 0.0, &p, &SolverConfig::default()).unwrap();
        let expect = 3.0 / norm_sqr(&ch.h1);
        assert!((r.objective / expect - 1.0).abs() < 1e-9);
        let x1 = inner(&ch.h1, r.w.as_slice()).norm_sqr();
        assert!((x1 / norm_sqr(&ch.h1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csr_bd_binding_regime() {
        let p = params(2, 0.5, 4);
        let ch = generate_channels(&p, -10.0, 12);
        let r = solve_tpm_csr(&ch, 0.5, 1.5, &p, &SolverConfig::default()).unwrap();
        let at = at_power(&p, r.objective);
        let bd = csr_bd_rate(&ch, r.w.as_slice(), &at);
        assert!((bd / 1.5 - 1.0).abs() < 1e-6, "{bd}");
        assert!(r.sdr_bound <= r.objective);
    }

    #[test]
    fn csr_more_spreading_needs_more_power() {
        let cfg = SolverConfig::default();
        for seed in 0..3 {
            let p1 = params(2, 0.5, 1);
            let p128 = params(2, 0.5, 128);
            let ch = generate_channels(&p1, -10.0, seed);
            let a = solve_tpm_csr(&ch, 1.0, 0.2, &p1, &cfg).unwrap();
            let b = solve_tpm_csr(&ch, 1.0, 0.2, &p128, &cfg).unwrap();
            assert!(b.objective > a.objective);
        }
    }

    #[test]
    fn halfspace_projection() {
        let n = [0.0, 0.0, 1.0];
        let r = project_ball_halfspace([0.0, 0.0, -2.0], n, 0.5);
        assert!((r[2] - 0.5).abs() < 1e-15);
        let r = project_ball_halfspace([2.0, 0.0, -2.0], n, 0.5);
        assert!((norm3(r) - 1.0).abs() < 1e-15 && (r[2] - 0.5).abs() < 1e-15);
        let r = project_ball_halfspace([0.1, 0.1, 0.6], n, 0.5);
        assert_eq!(r, [0.1, 0.1, 0.6]);
    }
}
