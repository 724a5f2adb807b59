//! Eigenvalues of a kernel and its normalized spectral polynomials
//!
//! ```text
//! Q_0 = I,   Q_{k+1} = Q_k (P - θ_k I) / (1 - θ_k),
//! ```
//!
//! which satisfy `Q_k P = θ_k Q_k + (1 - θ_k) Q_{k+1}` and have unit row sums.
//! All polynomial arithmetic is complex so that chains with complex spectra
//! go through the same code path; for real spectra every imaginary part is
//! exactly zero.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::chain::TransitionKernel;
use crate::error::{Error, Result};
use crate::linalg::{self, EigenMethod};
use crate::tol;

/// Ordered eigenvalues `θ_0, …, θ_d` of a kernel with `θ_d = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    thetas: Vec<Complex64>,
    pub all_real: bool,
    pub all_nonneg_real: bool,
    pub realness_tol: f64,
    pub method: EigenMethod,
}

/// Ordering used for `θ_0, …, θ_{d-1}`, echoed in reports.
pub const ORDERING: &str = "nondecreasing real part, ties by nondecreasing imaginary part";

impl SpectrumReport {
    /// Builds a report from the `d` non-unit eigenvalues (any order).
    ///
    /// Imaginary parts below the realness threshold are dropped and real
    /// values in `[-tol::EIG, 0)` are clamped to zero.
    pub fn from_nonunit(nonunit: Vec<Complex64>, method: EigenMethod) -> Self {
        let mut thetas: Vec<Complex64> = nonunit
            .into_iter()
            .map(|z| if z.im.abs() <= tol::REALNESS * (1.0 + z.norm()) { Complex64::new(z.re, 0.0) } else { z })
            .collect();
        let all_real = thetas.iter().all(|z| z.im == 0.0);
        if all_real {
            for z in thetas.iter_mut() {
                if z.re < 0.0 && z.re >= -tol::EIG {
                    z.re = 0.0;
                }
            }
        }
        thetas.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let all_nonneg_real = all_real && thetas.iter().all(|z| z.re >= 0.0);
        thetas.push(Complex64::new(1.0, 0.0));
        SpectrumReport { thetas, all_real, all_nonneg_real, realness_tol: tol::REALNESS, method }
    }

    /// Convenience for real non-unit eigenvalues.
    pub fn from_real(nonunit: &[f64]) -> Self {
        Self::from_nonunit(nonunit.iter().map(|&x| Complex64::new(x, 0.0)).collect(), EigenMethod::Triangular)
    }

    /// All `d + 1` eigenvalues; the last one is exactly `1`.
    pub fn thetas(&self) -> &[Complex64] {
        &self.thetas
    }

    /// The `d` non-unit eigenvalues.
    pub fn nonunit(&self) -> &[Complex64] {
        &self.thetas[..self.thetas.len() - 1]
    }

    /// Real parts of the non-unit eigenvalues, if the spectrum is real.
    pub fn real_nonunit(&self) -> Option<Vec<f64>> {
        self.all_real.then(|| self.nonunit().iter().map(|z| z.re).collect())
    }

    pub fn d(&self) -> usize {
        self.thetas.len() - 1
    }

    /// Continuous-time rates `ν_j = rate (1 - θ_j)` for a kernel uniformized at `rate`.
    pub fn rates(&self, rate: f64) -> Vec<Complex64> {
        self.nonunit().iter().map(|&t| (Complex64::new(1.0, 0.0) - t) * rate).collect()
    }
}

/// Eigenvalues of `P`. For an absorbing target they are `{1}` together with
/// the eigenvalues of the transient block; otherwise the eigenvalue nearest
/// to one is taken as the unit eigenvalue.
pub fn eigenvalues(p: &TransitionKernel) -> Result<SpectrumReport> {
    if p.class().target_absorbing {
        let (vals, method) = linalg::eigenvalues(&p.transient_block())?;
        if let Some(z) = vals.iter().find(|z| z.norm() >= 1.0 - tol::EIG) {
            return Err(Error::EigenFailure(format!("transient block has eigenvalue {z} on the unit circle")));
        }
        return Ok(SpectrumReport::from_nonunit(vals, method));
    }
    let (mut vals, method) = linalg::eigenvalues(p.matrix())?;
    let one = Complex64::new(1.0, 0.0);
    let (idx, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - one).norm().total_cmp(&(b.1 - one).norm()))
        .expect("at least two states");
    if (vals[idx] - one).norm() > tol::EIG {
        return Err(Error::EigenFailure("no eigenvalue equal to one".into()));
    }
    vals.remove(idx);
    if let Some(z) = vals.iter().find(|z| (*z - one).norm() <= tol::EIG) {
        return Err(Error::EigenFailure(format!("unit eigenvalue {z} is not simple")));
    }
    Ok(SpectrumReport::from_nonunit(vals, method))
}

/// The matrices `Q_0, …, Q_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPolynomials {
    q: Vec<DMatrix<Complex64>>,
    /// All entries real and at least `-tol::NONNEG`.
    pub nonneg: bool,
    /// Smallest real part over all entries.
    pub min_entry: f64,
    /// Largest imaginary part over all entries.
    pub max_imag: f64,
}

impl SpectralPolynomials {
    pub fn q(&self, k: usize) -> &DMatrix<Complex64> {
        &self.q[k]
    }

    pub fn all(&self) -> &[DMatrix<Complex64>] {
        &self.q
    }

    /// `max_k ||Q_k P - θ_k Q_k - (1 - θ_k) Q_{k+1}||_∞` for `k < d`.
    pub fn recurrence_residual(&self, p: &TransitionKernel, spectrum: &SpectrumReport) -> f64 {
        let pc = linalg::to_complex(p.matrix());
        let one = Complex64::new(1.0, 0.0);
        (0..spectrum.d())
            .map(|k| {
                let th = spectrum.thetas()[k];
                let r = &self.q[k] * &pc - &self.q[k] * th - &self.q[k + 1] * (one - th);
                linalg::inf_norm(&r)
            })
            .fold(0.0, f64::max)
    }

    /// `||Q_d P - Q_d||_∞`, zero by Cayley–Hamilton.
    pub fn cayley_hamilton_residual(&self, p: &TransitionKernel) -> f64 {
        let qd = self.q.last().expect("nonempty");
        linalg::inf_norm(&(qd * linalg::to_complex(p.matrix()) - qd))
    }

    /// Largest deviation of any row sum from one.
    pub fn row_sum_residual(&self) -> f64 {
        self.q
            .iter()
            .flat_map(|q| q.row_iter().map(|r| (r.sum() - Complex64::new(1.0, 0.0)).norm()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

/// Builds `Q_0, …, Q_d` by the one-factor recurrence.
pub fn spectral_polynomials(p: &TransitionKernel, spectrum: &SpectrumReport) -> Result<SpectralPolynomials> {
    let n = p.n();
    if spectrum.d() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n, got: spectrum.d() + 1 });
    }
    let pc = linalg::to_complex(p.matrix());
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut q = Vec::with_capacity(n);
    q.push(id.clone());
    for k in 0..spectrum.d() {
        let th = spectrum.thetas()[k];
        let factor = (&pc - &id * th) / (Complex64::new(1.0, 0.0) - th);
        let next = &q[k] * factor;
        q.push(next);
    }
    let min_entry = q.iter().map(linalg::min_real).fold(f64::INFINITY, f64::min);
    let max_imag = q.iter().map(linalg::max_imag).fold(0.0, f64::max);
    let nonneg = max_imag <= tol::NONNEG && min_entry >= -tol::NONNEG;
    Ok(SpectralPolynomials { q, nonneg, min_entry, max_imag })
}

/// Outcome of [`classify_spectrum`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumClass {
    pub real_nonneg: bool,
    pub polys_nonneg: bool,
    /// Entries in `[-tol::NONNEG, 0)` that were treated as zero.
    pub clamped_entries: usize,
    pub diagnosis: String,
}

pub fn classify_spectrum(spectrum: &SpectrumReport, polys: &SpectralPolynomials) -> SpectrumClass {
    let clamped_entries =
        polys.all().iter().flat_map(|q| q.iter()).filter(|z| z.re < 0.0 && z.re >= -tol::NONNEG).count();
    let mut notes = Vec::new();
    if !spectrum.all_real {
        notes.push(
            "complex eigenvalues: the absorption law is exposed only as a numeric CDF; \
             other orderings of the conjugate pairs were not searched"
                .to_string(),
        );
    } else if !spectrum.all_nonneg_real {
        notes.push("real spectrum with negative eigenvalues".into());
    } else {
        notes.push("real nonnegative spectrum".into());
    }
    if polys.nonneg {
        notes.push("spectral polynomials are stochastic".into());
    } else {
        notes.push(format!(
            "spectral polynomials are not nonnegative (min entry {:.3e}, max imaginary part {:.3e})",
            polys.min_entry, polys.max_imag
        ));
    }
    if clamped_entries > 0 {
        notes.push(format!("{clamped_entries} round-off entries clamped to zero"));
    }
    SpectrumClass {
        real_nonneg: spectrum.all_nonneg_real,
        polys_nonneg: polys.nonneg,
        clamped_entries,
        diagnosis: notes.join("; "),
    }
}
