//! Goodness-of-fit helpers for the Monte Carlo gates.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Asymptotic one-sample Kolmogorov–Smirnov critical value at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of the statistic `d` from `n` samples, with the usual
/// small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// KS distance between sorted samples and a continuous CDF evaluated at them.
pub fn ks_statistic_sorted(cdf_at_samples: &[f64]) -> f64 {
    let n = cdf_at_samples.len() as f64;
    cdf_at_samples.iter().enumerate().map(|(i, &f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n)).fold(0.0, f64::max)
}

/// KS distance for integer-valued samples: `counts[t]` observations at `t`,
/// compared with `cdf[t] = F(t)`. Both CDFs are step functions with jumps on
/// the integers, so the supremum is attained there.
pub fn ks_statistic_integer(counts: &[u64], cdf: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut acc = 0u64;
    let mut d = 0.0f64;
    for (t, &c) in counts.iter().enumerate() {
        acc += c;
        d = d.max((acc as f64 / n as f64 - cdf[t]).abs());
    }
    d
}

/// Pearson chi-square outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson test of `observed` counts against cell probabilities `probs`.
///
/// Cells with expected count below 5 are pooled into one bin; if that bin is
/// still below 5 it is merged into the smallest remaining cell. Returns
/// `None` when fewer than two bins remain.
pub fn chi_square_pooled(observed: &[u64], probs: &[f64]) -> Option<ChiSquareTest> {
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = nf * p.max(0.0);
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pooled.0 > 0.0 || pooled.1 > 0.0 {
        if pooled.1 >= 5.0 || bins.is_empty() {
            bins.push(pooled);
        } else {
            let k = bins.iter().enumerate().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).map(|(k, _)| k).expect("nonempty");
            bins[k].0 += pooled.0;
            bins[k].1 += pooled.1;
        }
    }
    if bins.len() < 2 {
        return None;
    }
    let statistic: f64 = bins.iter().map(|(o, e)| if *e > 0.0 { (o - e).powi(2) / e } else { f64::INFINITY }).sum();
    let df = bins.len() - 1;
    let p_value =
        if statistic.is_finite() { ChiSquared::new(df as f64).expect("positive df").sf(statistic) } else { 0.0 };
    Some(ChiSquareTest { statistic, df, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_value_at_one_percent() {
        assert!((ks_critical(1, 0.01) - 1.627_623).abs() < 1e-5);
        assert!((kolmogorov_sf(1.627_623) - 0.01).abs() < 1e-5);
        assert!((kolmogorov_sf(1.358_099) - 0.05).abs() < 1e-5);
    }

    #[test]
    fn integer_ks() {
        let d = ks_statistic_integer(&[0, 5, 5], &[0.0, 0.4, 1.0]);
        assert!((d - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sorted_ks_of_uniform_grid() {
        let f: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_statistic_sorted(&f) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn chi_square_exact_fit() {
        let t = chi_square_pooled(&[25, 25, 50], &[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.df, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_pools_small_cells() {
        let t = chi_square_pooled(&[1, 0, 49, 50], &[0.01, 0.01, 0.48, 0.5]).unwrap();
        assert_eq!(t.df, 1);
        assert!(chi_square_pooled(&[100, 0], &[1.0, 0.0]).is_none());
        let bad = chi_square_pooled(&[90, 10], &[1.0, 0.0]);
        assert!(bad.is_none() || bad.unwrap().p_value < 1e-6);
    }
}
