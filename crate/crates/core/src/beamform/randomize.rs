//! Rank-one extraction by phase randomization.
//!
//! For a relaxed solution `A = UΣUᴴ` each trial draws independent uniform
//! phases `θ_k` and forms `v = UΣ^{1/2}e` with `e_k = e^{jθ_k}`. Because the
//! phases have unit modulus, `‖v‖² = Tr Σ = Tr A` for every trial, and
//! `E[vvᴴ] = A`.

use crate::rng::Stream;
use crate::Complex64;

use super::hermitian::Hermitian2;

/// `trials` candidate vectors in the coordinates of `a`.
pub fn randomized_candidates(a: &Hermitian2, trials: usize, seed: u64) -> Vec<[Complex64; 2]> {
    let eig = a.eigen();
    let s = eig.values.map(|l| l.max(0.0).sqrt());
    let u = eig.vectors;
    let mut stream = Stream::new(seed);
    (0..trials)
        .map(|_| {
            let p0 = stream.unit_phase() * s[0];
            let p1 = stream.unit_phase() * s[1];
            [u[0][0] * p0 + u[1][0] * p1, u[0][1] * p0 + u[1][1] * p1]
        })
        .collect()
}

/// Index and score of the highest-scoring candidate. Ties keep
/// the first.
pub fn best_candidate<F: FnMut(&[Complex64; 2]) -> f64>(
    candidates: &[[Complex64; 2]],
    mut score: F,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let s = score(c);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

/// Index of the first feasible candidate, stopping at the first hit.
pub fn first_feasible<F: FnMut(&[Complex64; 2]) -> bool>(
    candidates: &[[Complex64; 2]],
    feasible: F,
) -> Option<usize> {
    candidates.iter().position(feasible)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_is_preserved_exactly() {
        let a = Hermitian2::from_bloch(3.5, [0.2, -0.4, 0.1]);
        for v in randomized_candidates(&a, 500, 9) {
            let p = v[0].norm_sqr() + v[1].norm_sqr();
            assert!((p - 3.5).abs() < 1e-14 * 3.5);
        }
    }

    #[test]
    fn mean_outer_product_approaches_the_relaxed_matrix() {
        let a = Hermitian2::from_bloch(2.0, [0.3, 0.1, -0.5]);
        let cands = randomized_candidates(&a, 40_000, 1);
        let n = cands.len() as f64;
        let (mut m00, mut m11, mut m01) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for v in &cands {
            m00 += v[0].norm_sqr() / n;
            m11 += v[1].norm_sqr() / n;
            m01 += v[0] * v[1].conj() / n;
        }
        assert!((m00 - a.a).abs() < 0.03);
        assert!((m11 - a.d).abs() < 0.03);
        assert!((m01 - a.b).norm() < 0.03);
    }

    #[test]
    fn selection_helpers() {
        let c = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]; 3];
        let mut k = 0.0;
        let best = best_candidate(&c, |_| {
            k += 1.0;
            if k == 2.0 {
                5.0
            } else {
                1.0
            }
        });
        assert_eq!(best, Some((1, 5.0)));
        let mut calls = 0;
        assert_eq!(first_feasible(&c, |_| {
            calls += 1;
            calls == 2
        }), Some(1));
    }
}
