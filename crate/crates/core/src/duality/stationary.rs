use serde::Serialize;

use crate::chain::{
    ctmc_distribution_oracle, stationary_law, uniformize, InitialLaw, RateGenerator, TransitionKernel, UniformRate,
};
use crate::error::{Error, Result};
use crate::linalg;

const MONOTONE_TOL: f64 = 1e-12;
const ARGMIN_TOL: f64 = 1e-12;

/// Result of the stochastic-monotonicity check on the time reversal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub monotone: bool,
    /// First pair of consecutive rows `(x, x + 1)` violating dominance.
    pub witness: Option<(usize, usize)>,
}

/// Checks that the rows of `P̃(x, y) = π(y) p_yx / π(x)` increase in the
/// usual stochastic order: every prefix sum of row `x` is at least the
/// matching prefix sum of row `x + 1`.
pub fn check_monotone_reversal(p: &TransitionKernel) -> Result<MonotoneCheck> {
    let pi = stationary_law(p)?;
    let n = p.n();
    let reversal = |x: usize, y: usize| pi[y] * p.entry(y, x) / pi[x];
    for x in 0..n - 1 {
        let (mut upper, mut lower) = (0.0, 0.0);
        for y in 0..n {
            upper += reversal(x, y);
            lower += reversal(x + 1, y);
            if upper < lower - MONOTONE_TOL {
                return Ok(MonotoneCheck { monotone: false, witness: Some((x, x + 1)) });
            }
        }
    }
    Ok(MonotoneCheck { monotone: true, witness: None })
}

/// Separation `s(t) = 1 - min_x (m0 P^t)(x) / π(x)` and its minimizers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationProfile {
    pub s: Vec<f64>,
    /// Minimizing state at each `t`; the target wins ties.
    pub argmin_state: Vec<usize>,
    /// First `t` at which the target does not attain the minimum.
    pub first_violation: Option<usize>,
}

impl SeparationProfile {
    pub fn argmin_is_target(&self) -> bool {
        self.first_violation.is_none()
    }
}

pub fn separation(p: &TransitionKernel, m0: &InitialLaw, t_max: usize) -> Result<SeparationProfile> {
    if !p.class().ergodic {
        return Err(Error::NotErgodic("separation needs a stationary law".into()));
    }
    m0.check_len(p.n())?;
    let pi = stationary_law(p)?;
    let d = p.d();
    let mut v = m0.as_slice().to_vec();
    let mut s = Vec::with_capacity(t_max + 1);
    let mut argmin_state = Vec::with_capacity(t_max + 1);
    let mut first_violation = None;
    for t in 0..=t_max {
        if t > 0 {
            v = linalg::vec_mat(&v, p.matrix());
        }
        let ratios: Vec<f64> = v.iter().zip(&pi).map(|(a, b)| a / b).collect();
        let (mut best, mut min) = (d, ratios[d]);
        for (x, &r) in ratios.iter().enumerate() {
            if r < min - ARGMIN_TOL {
                best = x;
                min = r;
            }
        }
        if best != d && first_violation.is_none() {
            first_violation = Some(t);
        }
        s.push((1.0 - min).clamp(0.0, 1.0));
        argmin_state.push(best);
    }
    Ok(SeparationProfile { s, argmin_state, first_violation })
}

/// Separation of a continuous-time chain on a grid of times.
pub fn separation_continuous(g: &RateGenerator, m0: &InitialLaw, times: &[f64]) -> Result<Vec<f64>> {
    let (p, _) = uniformize(g, UniformRate::Auto)?;
    if !p.class().ergodic {
        return Err(Error::NotErgodic("separation needs a stationary law".into()));
    }
    let pi = stationary_law(&p)?;
    Ok(ctmc_distribution_oracle(g, m0, times)?
        .iter()
        .map(|v| {
            let min = v.iter().zip(&pi).map(|(a, b)| a / b).fold(f64::INFINITY, f64::min);
            (1.0 - min).clamp(0.0, 1.0)
        })
        .collect())
}
