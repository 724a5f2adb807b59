//! Small dense linear-algebra helpers: eigenvalue dispatch, balancing and
//! complex matrix utilities.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const MAX_QR_ITER: usize = 10_000;

/// Which eigensolver produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    /// Eigenvalues read off the diagonal of a triangular matrix.
    Triangular,
    /// Diagonal similarity to a symmetric matrix, then symmetric QR.
    Symmetrized,
    /// Balancing, Hessenberg reduction and shifted QR.
    HessenbergQr,
}

/// Eigenvalues of a small dense real matrix, picking the most reliable route.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, EigenMethod)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), EigenMethod::Triangular));
    }
    if is_upper_triangular(a) || is_lower_triangular(a) {
        let diag = (0..n).map(|i| Complex64::new(a[(i, i)], 0.0)).collect();
        return Ok((diag, EigenMethod::Triangular));
    }
    if let Some(w) = detailed_balance_weights(a) {
        let s = symmetrize(a, &w);
        let eig = SymmetricEigen::try_new(s, f64::EPSILON, MAX_QR_ITER)
            .ok_or_else(|| Error::EigenFailure("symmetric QR did not converge".into()))?;
        let vals = eig.eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        return Ok((vals, EigenMethod::Symmetrized));
    }
    let balanced = balance(a);
    let schur = Schur::try_new(balanced, f64::EPSILON, MAX_QR_ITER)
        .ok_or_else(|| Error::EigenFailure("shifted QR did not converge".into()))?;
    let vals = schur.complex_eigenvalues().iter().copied().collect();
    Ok((vals, EigenMethod::HessenbergQr))
}

pub fn is_upper_triangular(a: &DMatrix<f64>) -> bool {
    (0..a.nrows()).all(|i| (0..i).all(|j| a[(i, j)] == 0.0))
}

pub fn is_lower_triangular(a: &DMatrix<f64>) -> bool {
    (0..a.nrows()).all(|i| (i + 1..a.ncols()).all(|j| a[(i, j)] == 0.0))
}

/// Positive weights `w` with `w_i a_ij = w_j a_ji` for all `i, j`, if any exist.
///
/// Weights are propagated along a spanning forest of the support graph and
/// then every pair is checked. Each connected component gets its own scale.
pub fn detailed_balance_weights(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = a.nrows();
    let mut w = vec![0.0; n];
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        w[root] = 1.0;
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if i == j || seen[j] {
                    continue;
                }
                let (fwd, back) = (a[(i, j)], a[(j, i)]);
                if fwd == 0.0 && back == 0.0 {
                    continue;
                }
                if fwd == 0.0 || back == 0.0 {
                    return None;
                }
                w[j] = w[i] * fwd / back;
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let lhs = w[i] * a[(i, j)];
            let rhs = w[j] * a[(j, i)];
            if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE) {
                return None;
            }
        }
    }
    Some(w)
}

/// `D^{1/2} A D^{-1/2}` with `D = diag(w)`, averaged to be exactly symmetric.
fn symmetrize(a: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let root: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = root[i] * a[(i, j)] / root[j];
        }
    }
    let st = s.transpose();
    (s + st) * 0.5
}

/// Parlett–Reinsch balancing by powers of two.
pub fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut m = a.clone();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
    m
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(a: &DMatrix<Complex64>) -> f64 {
    a.row_iter().map(|row| row.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest absolute imaginary part of any entry.
pub fn max_imag(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

/// Smallest real part of any entry.
pub fn min_real(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}

/// Row vector times matrix for a real kernel.
pub fn vec_mat(v: &[f64], a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.ncols();
    let mut out = vec![0.0; n];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += vi * a[(i, j)];
        }
    }
    out
}

/// Solves `a x = b`; fails when the LU factorization is singular or the
/// solution is not finite.
pub fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let x = a.lu().solve(&b).ok_or(Error::SingularSystem)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::SingularSystem)
    }
}
