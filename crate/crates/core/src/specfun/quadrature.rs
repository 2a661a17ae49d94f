//! Adaptive Gauss-Kronrod (G7/K15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae on [-1, 1], descending; odd indices are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 20_000;

/// Settings for adaptive quadrature.
///
/// `node_count` is the number of equal panels the interval is cut into
/// before adaptive bisection starts. Each panel is evaluated with the
/// 15-point Kronrod rule and its embedded 7-point Gauss rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub node_count: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            node_count: 16,
            abs_tol: 1e-11,
            rel_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One G7/K15 panel on `[a, b]`. Returns the Kronrod estimate and
/// `|K15 - G7|` as the error estimate.
pub fn gauss_kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

impl Quadrature {
    pub fn new(node_count: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let q = Self {
            node_count,
            abs_tol,
            rel_tol,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 16 {
            return Err(Error::InvalidParams(format!(
                "quadrature node_count must be >= 16, got {}",
                self.node_count
            )));
        }
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if !ok(self.abs_tol) || !ok(self.rel_tol) {
            return Err(Error::InvalidParams(
                "quadrature tolerances must be finite and strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Integral {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrates `f` over `[points[0], points[last]]`, splitting the
    /// initial panels at every interior break point. `points` must be
    /// nondecreasing; zero-width pieces are skipped.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Integral {
        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        let mut evaluations = 0;
        let pieces = points.len().saturating_sub(1).max(1);
        let per_piece = self.node_count.div_ceil(pieces).max(1);
        for w in points.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let step = (hi - lo) / per_piece as f64;
            for k in 0..per_piece {
                let a = lo + step * k as f64;
                let b = if k + 1 == per_piece { hi } else { a + step };
                let (value, error) = gauss_kronrod_panel(&f, a, b);
                evaluations += 15;
                total += value;
                total_err += error;
                heap.push(Panel { a, b, value, error });
            }
        }

        let mut converged = false;
        while heap.len() < MAX_PANELS {
            if total_err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                converged = true;
                break;
            }
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Panel can no longer be bisected in floating point.
                heap.push(worst);
                break;
            }
            let (v1, e1) = gauss_kronrod_panel(&f, worst.a, mid);
            let (v2, e2) = gauss_kronrod_panel(&f, mid, worst.b);
            evaluations += 30;
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }
        if !converged {
            // Re-sum to shed accumulated rounding in the running totals.
            let (v, e) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
            total = v;
            total_err = e;
            converged = total_err <= self.abs_tol.max(self.rel_tol * total.abs());
        }
        Integral {
            value: total,
            error: total_err,
            converged,
            evaluations,
        }
    }
}
