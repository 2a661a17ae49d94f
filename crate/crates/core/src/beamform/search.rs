//! One-dimensional searches: golden section and the rank-one great circle.

use std::f64::consts::TAU;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes `f` on `[a, b]` by golden-section search until the bracket is
/// narrower than `tol`. Returns `(x, f(x), evaluations)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64, usize) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;
    while hi - lo > tol && evals < 400 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        evals += 1;
    }
    if f1 >= f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}

/// Result of a search over the circle angle.
#[derive(Debug, Clone, Copy)]
pub struct CircleOptimum {
    pub angle: f64,
    pub score: f64,
    pub evaluations: usize,
}

/// Maximizes `score(ψ)` over `ψ ∈ [0, 2π)`: a uniform grid of `steps`
/// angles plus the `extra` candidates, then golden-section refinement
/// between the neighbours of the best grid angle. Ties keep the earliest
/// candidate, grid before extras.
pub fn circle_max<F: FnMut(f64) -> f64>(mut score: F, steps: usize, extra: &[f64]) -> CircleOptimum {
    let h = TAU / steps as f64;
    let mut best_k = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..steps {
        let s = score(k as f64 * h);
        if s > best {
            best = s;
            best_k = k;
        }
    }
    let mut out = CircleOptimum {
        angle: best_k as f64 * h,
        score: best,
        evaluations: steps,
    };
    if best.is_finite() {
        let centre = best_k as f64 * h;
        let (x, fx, n) = golden_max(&mut score, centre - h, centre + h, 1e-11);
        out.evaluations += n;
        if fx > out.score {
            out.angle = x.rem_euclid(TAU);
            out.score = fx;
        }
    }
    for &psi in extra {
        let s = score(psi);
        out.evaluations += 1;
        if s > out.score {
            out.angle = psi.rem_euclid(TAU);
            out.score = s;
        }
    }
    out
}
