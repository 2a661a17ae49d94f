//! One-sample Kolmogorov–Smirnov test against a density known in closed form.

use crate::specfun::gauss_kronrod_panel;

/// Outcome of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    /// Supremum distance between empirical and model CDF.
    pub statistic: f64,
    /// Asymptotic p-value of `statistic · √n`.
    pub p_value: f64,
    pub samples: usize,
}

impl KsOutcome {
    /// Two-sided acceptance at the given significance level.
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// KS test of `samples` against `pdf` supported on `[lower, ∞)`.
///
/// The model CDF at each sorted sample is accumulated from one 15-point
/// Kronrod panel per gap between neighbours, so a million samples need
/// fifteen million density evaluations and no root-finding.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], lower: f64, pdf: F) -> KsOutcome {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut cdf = 0.0;
    let mut prev = lower;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        if x > prev {
            cdf += gauss_kronrod_panel(&pdf, prev, x).0;
            prev = x;
        }
        let model = cdf.clamp(0.0, 1.0);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max((model - below).abs()).max((above - model).abs());
    }
    KsOutcome {
        statistic: d,
        p_value: kolmogorov_survival(d * n.sqrt()),
        samples: samples.len(),
    }
}

/// `P(K > t)` for the Kolmogorov distribution,
/// `2 Σ_{k≥1} (−1)^{k−1} e^{−2k²t²}`.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.2 {
        // The alternating series converges slowly here; the value is 1 to
        // double precision anyway.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn critical_value_at_one_percent() {
        assert!((kolmogorov_survival(1.627_6) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn accepts_true_model_and_rejects_wrong_one() {
        let mut s = Stream::new(5);
        let mut xs: Vec<f64> = (0..20_000).map(|_| s.exponential()).collect();
        let good = ks_test(&mut xs, 0.0, |x| (-x).exp());
        assert!(good.passes(0.01), "{good:?}");
        let bad = ks_test(&mut xs, 0.0, |x| 0.8 * (-0.8 * x).exp());
        assert!(!bad.passes(0.01));
    }
}
