//! Numerical tolerances shared by every module.
//!
//! They are collected here so that reports can echo the exact values used.

use serde::Serialize;

/// Row-sum and entry-range tolerance for kernels and generators.
pub const ROW: f64 = 1e-12;

/// Eigenvalue tolerance (unit eigenvalue detection, clamping of tiny negatives).
pub const EIG: f64 = 1e-9;

/// Relative realness threshold: `|Im θ| <= REALNESS * (1 + |θ|)` counts as real.
pub const REALNESS: f64 = 1e-9;

/// Entries in `[-NONNEG, 0)` are treated as round-off zeros.
pub const NONNEG: f64 = 1e-10;

/// Largest imaginary part tolerated on a reported probability.
pub const IMAG: f64 = 1e-8;

/// Truncation bound for Poisson-weighted series.
pub const SERIES: f64 = 1e-12;

/// Headroom applied to the automatic uniformization rate.
pub const UNIFORMIZATION_MARGIN: f64 = 0.05;

/// Bisection tolerance on CDF values for continuous quantiles.
pub const QUANTILE: f64 = 1e-12;

/// Numeric CDFs are extended until `1 - F(t)` drops below this.
pub const HORIZON_MASS: f64 = 1e-9;

/// Hard cap on the discrete horizon.
pub const HORIZON_STEPS: u64 = 1_000_000;

/// Algebraic identity tolerance for an `n`-state chain.
pub fn alg(n: usize) -> f64 {
    1e-10 * n as f64
}

/// Snapshot of the tolerances, embedded in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub row: f64,
    pub eig: f64,
    pub realness: f64,
    pub nonneg: f64,
    pub imag: f64,
    pub series: f64,
    pub alg_per_state: f64,
    pub uniformization_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            row: ROW,
            eig: EIG,
            realness: REALNESS,
            nonneg: NONNEG,
            imag: IMAG,
            series: SERIES,
            alg_per_state: alg(1),
            uniformization_margin: UNIFORMIZATION_MARGIN,
        }
    }
}
