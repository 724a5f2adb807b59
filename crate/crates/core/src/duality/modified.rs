use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{mixture_weights, LinkMatrix, ONE, ZERO};
use crate::chain::InitialLaw;
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::SpectrumReport;
use crate::tol;

/// The modified link `Λ̄` and dual `P̄ = B + R` that make absorption of the
/// dual coincide with absorption of the primal chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedDual {
    pub lambda_bar: LinkMatrix,
    /// Upper bidiagonal part.
    pub b: DMatrix<Complex64>,
    /// Rank-one part supported on the last column.
    pub r: DMatrix<Complex64>,
    pub p_bar: DMatrix<Complex64>,
    /// `(1 - m0(d), 0, …, 0, m0(d))`.
    pub m_bar0: Vec<f64>,
    /// `min { i : λ_i(d) = 1 }`.
    pub d_bar: usize,
    /// Absorbing states `d̄, …, d` of `P̄`.
    pub absorbing: Vec<usize>,
    /// `Λ̄` and `P̄` both real and entrywise nonnegative.
    pub stochastic: bool,
}

impl ModifiedDual {
    /// `P̄` as a real kernel with round-off negatives clamped.
    pub fn p_bar_stochastic(&self) -> Result<DMatrix<f64>> {
        if !self.stochastic {
            return Err(Error::NotStochasticLink { min_entry: linalg::min_real(&self.p_bar) });
        }
        let mut m = self.p_bar.map(|z| z.re.max(0.0));
        for mut row in m.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        Ok(m)
    }

    /// `||m0 - m̄0 Λ̄||_∞`.
    pub fn initial_residual(&self, m0: &InitialLaw) -> f64 {
        let n = self.m_bar0.len();
        (0..n)
            .map(|j| {
                let mixed: Complex64 = (0..n).map(|i| self.lambda_bar.entry(i, j) * self.m_bar0[i]).sum();
                (mixed - Complex64::new(m0.as_slice()[j], 0.0)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds `Λ̄`, `B`, `R`, `P̄`, `m̄0` and `d̄` from the link `Λ` of `m0`.
pub fn build_modified_dual(link: &LinkMatrix, spectrum: &SpectrumReport, m0: &InitialLaw) -> Result<ModifiedDual> {
    let n = link.n();
    m0.check_len(n)?;
    let d = n - 1;
    let col = link.target_column();
    let weights = mixture_weights(link);
    let a = weights.as_slice();
    let thetas = spectrum.thetas();
    let absorbed = |i: usize| (col[i] - ONE).norm() <= tol::alg(n);

    let mut lambda_bar = DMatrix::from_element(n, n, ZERO);
    let mut b = DMatrix::from_element(n, n, ZERO);
    let mut r = DMatrix::from_element(n, n, ZERO);
    for i in 0..n {
        if absorbed(i) {
            lambda_bar[(i, d)] = ONE;
            b[(i, i)] = ONE;
            continue;
        }
        let scale = ONE - col[i];
        for j in 0..d {
            lambda_bar[(i, j)] = link.entry(i, j) / scale;
        }
        b[(i, i)] = thetas[i];
        if i < d {
            let ratio = (ONE - col[i + 1]) / scale;
            b[(i, i + 1)] = ratio * (ONE - thetas[i]);
            r[(i, d)] = a[i + 1] / scale * (ONE - thetas[i]);
        }
    }
    let p_bar = &b + &r;
    let d_bar = (0..n).find(|&i| absorbed(i)).unwrap_or(d);
    let m_bar0 = {
        let mut v = vec![0.0; n];
        let md = m0.as_slice()[d];
        v[0] = 1.0 - md;
        v[d] += md;
        v
    };
    let lambda_bar = LinkMatrix::from_complex(lambda_bar);
    let p_min = linalg::min_real(&p_bar);
    let stochastic = lambda_bar.stochastic && linalg::max_imag(&p_bar) <= tol::NONNEG && p_min >= -tol::NONNEG;
    Ok(ModifiedDual { lambda_bar, b, r, p_bar, m_bar0, d_bar, absorbing: (d_bar..=d).collect(), stochastic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TransitionKernel;
    use crate::duality::{check_intertwining, DualSystem};

    fn gen3() -> TransitionKernel {
        TransitionKernel::from_rows(&[vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    fn build(p: &TransitionKernel, m0: &InitialLaw) -> (DualSystem, ModifiedDual) {
        let sys = DualSystem::build(p, m0).unwrap();
        let md = build_modified_dual(&sys.link, &sys.spectrum, m0).unwrap();
        (sys, md)
    }

    fn real(m: &DMatrix<Complex64>) -> DMatrix<f64> {
        m.map(|z| z.re)
    }

    #[test]
    fn gen3_modified_dual() {
        let p = gen3();
        let m0 = InitialLaw::delta(3, 0);
        let (_, md) = build(&p, &m0);
        let lb = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0]);
        assert!((real(md.lambda_bar.matrix()) - lb).abs().max() < 1e-15);
        let pb = DMatrix::from_row_slice(3, 3, &[0.25, 0.5, 0.25, 0.0, 0.75, 0.25, 0.0, 0.0, 1.0]);
        assert!((real(&md.p_bar) - pb).abs().max() < 1e-15);
        assert_eq!(md.m_bar0, vec![1.0, 0.0, 0.0]);
        assert_eq!(md.d_bar, 2);
        assert_eq!(md.absorbing, vec![2]);
        assert!(md.stochastic);
        let rep = check_intertwining(md.lambda_bar.matrix(), p.matrix(), &md.p_bar, &[4]);
        assert!(rep.pass);
        assert!(md.initial_residual(&m0) <= 1e-12);
    }

    #[test]
    fn skip_free_modified_dual_equals_plain_dual() {
        let p = TransitionKernel::from_rows(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.2, 0.5, 0.3, 0.0],
            vec![0.1, 0.1, 0.6, 0.2],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let (sys, md) = build(&p, &InitialLaw::delta(4, 0));
        assert!(linalg::inf_norm(&(md.lambda_bar.matrix() - sys.link.matrix())) < 1e-12);
        assert!(linalg::inf_norm(&(&md.p_bar - sys.dual.matrix())) < 1e-12);
    }

    #[test]
    fn absorbed_start_is_degenerate() {
        let p = gen3();
        let m0 = InitialLaw::delta(3, 2);
        let (_, md) = build(&p, &m0);
        assert_eq!(md.m_bar0, vec![0.0, 0.0, 1.0]);
        assert_eq!(md.d_bar, 0);
        assert!(md.initial_residual(&m0) <= 1e-12);
    }

    #[test]
    fn general_start_satisfies_both_identities() {
        let p = gen3();
        let m0 = InitialLaw::new(vec![0.3, 0.5, 0.2]).unwrap();
        let (_, md) = build(&p, &m0);
        let rep = check_intertwining(md.lambda_bar.matrix(), p.matrix(), &md.p_bar, &[1, 3]);
        assert!(rep.pass, "{rep:?}");
        assert!(md.initial_residual(&m0) <= 1e-12);
        for row in md.p_bar.row_iter() {
            assert!((row.sum() - ONE).norm() < 1e-14);
        }
    }
}
