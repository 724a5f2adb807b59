//! Links, pure-birth duals and intertwining checks.
//!
//! For a kernel `P` with ordered eigenvalues `θ_0, …, θ_d = 1` the dual
//! kernel `P̂` holds at `i` with probability `θ_i` and steps to `i + 1`
//! otherwise. The link `Λ` with rows `λ_i = m0 Q_i` is the unique matrix with
//! `λ_0 = m0` and `Λ P = P̂ Λ`. Its last column yields the mixture weights
//! `a_k = Λ(k, d) - Λ(k - 1, d)` of the absorption law.

mod modified;
mod stationary;

pub use modified::{build_modified_dual, ModifiedDual};
pub use stationary::{check_monotone_reversal, separation, separation_continuous, MonotoneCheck, SeparationProfile};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{InitialLaw, TransitionKernel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{SpectralPolynomials, SpectrumReport};
use crate::tol;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// An intertwining link. Rows sum to one; entries may be complex when the
/// spectrum is.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    rows: DMatrix<Complex64>,
    /// Real with every entry at least `-tol::NONNEG`.
    pub stochastic: bool,
    /// Every entry above the diagonal vanishes (within `tol::NONNEG`).
    pub lower_triangular: bool,
    pub min_entry: f64,
}

impl LinkMatrix {
    pub fn from_complex(rows: DMatrix<Complex64>) -> Self {
        let min_entry = linalg::min_real(&rows);
        let stochastic = linalg::max_imag(&rows) <= tol::NONNEG && min_entry >= -tol::NONNEG;
        let n = rows.nrows();
        let lower_triangular = (0..n).all(|i| (i + 1..n).all(|j| rows[(i, j)].norm() <= tol::NONNEG));
        LinkMatrix { rows, stochastic, lower_triangular, min_entry }
    }

    pub fn from_real(rows: &DMatrix<f64>) -> Self {
        Self::from_complex(linalg::to_complex(rows))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[(i, j)]
    }

    /// Column `d`: `λ_i(d)` for every row.
    pub fn target_column(&self) -> Vec<Complex64> {
        let d = self.n() - 1;
        (0..self.n()).map(|i| self.rows[(i, d)]).collect()
    }

    /// Real parts with round-off negatives clamped to zero and each row
    /// renormalized. Fails unless the link is stochastic.
    pub fn to_stochastic(&self) -> Result<DMatrix<f64>> {
        if !self.stochastic {
            return Err(Error::NotStochasticLink { min_entry: self.min_entry });
        }
        let mut m = self.rows.map(|z| z.re.max(0.0));
        for mut row in m.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        Ok(m)
    }

    pub fn row_sum_residual(&self) -> f64 {
        self.rows.row_iter().map(|r| (r.sum() - ONE).norm()).fold(0.0, f64::max)
    }
}

/// Rows `λ_i = m0 Q_i`.
pub fn build_link(
    p: &TransitionKernel,
    spectrum: &SpectrumReport,
    polys: &SpectralPolynomials,
    m0: &InitialLaw,
) -> Result<LinkMatrix> {
    let n = p.n();
    m0.check_len(n)?;
    if spectrum.d() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n, got: spectrum.d() + 1 });
    }
    let m: Vec<Complex64> = m0.as_slice().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut rows = DMatrix::zeros(n, n);
    for i in 0..n {
        let q = polys.q(i);
        for j in 0..n {
            rows[(i, j)] = (0..n).map(|k| m[k] * q[(k, j)]).sum();
        }
    }
    Ok(LinkMatrix::from_complex(rows))
}

/// The upper-bidiagonal pure-birth kernel with diagonal `θ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualKernel {
    matrix: DMatrix<Complex64>,
}

impl DualKernel {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Holding probabilities `θ_0, …, θ_d`.
    pub fn thetas(&self) -> Vec<Complex64> {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)]).collect()
    }

    /// Real entries, when every `θ_i` is real.
    pub fn to_real(&self) -> Option<DMatrix<f64>> {
        (linalg::max_imag(&self.matrix) == 0.0).then(|| self.matrix.map(|z| z.re))
    }
}

pub fn build_dual(spectrum: &SpectrumReport) -> DualKernel {
    let n = spectrum.d() + 1;
    let mut matrix = DMatrix::from_element(n, n, ZERO);
    for (i, &th) in spectrum.thetas().iter().enumerate() {
        matrix[(i, i)] = th;
        if i + 1 < n {
            matrix[(i, i + 1)] = ONE - th;
        }
    }
    DualKernel { matrix }
}

/// Residuals of `Λ P^t = K^t Λ` for a link `Λ` and a dual kernel `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntertwiningReport {
    /// `||Λ P - K Λ||_∞`.
    pub one_step: f64,
    /// `(t, ||Λ P^t - K^t Λ||_∞)` for each requested power.
    pub powers: Vec<(usize, f64)>,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_intertwining(
    link: &DMatrix<Complex64>,
    p: &DMatrix<f64>,
    dual: &DMatrix<Complex64>,
    powers: &[usize],
) -> IntertwiningReport {
    let n = p.nrows();
    let pc = linalg::to_complex(p);
    let residual = |pt: &DMatrix<Complex64>, kt: &DMatrix<Complex64>| linalg::inf_norm(&(link * pt - kt * link));
    let one_step = residual(&pc, dual);
    let mut out = Vec::with_capacity(powers.len());
    let mut sorted: Vec<usize> = powers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut pt = DMatrix::<Complex64>::identity(n, n);
    let mut kt = DMatrix::<Complex64>::identity(n, n);
    let mut t = 0;
    for &target in &sorted {
        while t < target {
            pt = &pt * &pc;
            kt = &kt * dual;
            t += 1;
        }
        out.push((target, residual(&pt, &kt)));
    }
    let tol = tol::alg(n);
    let pass = one_step <= tol && out.iter().all(|&(_, r)| r <= tol);
    IntertwiningReport { one_step, powers: out, tol, pass }
}

/// Weights `a_0, …, a_{d+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureWeights {
    a: Vec<Complex64>,
}

impl MixtureWeights {
    pub fn new(a: Vec<Complex64>) -> Self {
        MixtureWeights { a }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.a
    }

    /// `a_0, …, a_d` (the always-vanishing `a_{d+1}` dropped).
    pub fn components(&self) -> &[Complex64] {
        &self.a[..self.a.len() - 1]
    }

    pub fn sum(&self) -> Complex64 {
        self.a.iter().sum()
    }

    /// Real parts when every imaginary part is below `tol::IMAG`.
    pub fn real(&self) -> Option<Vec<f64>> {
        self.a.iter().all(|z| z.im.abs() <= tol::IMAG).then(|| self.a.iter().map(|z| z.re).collect())
    }

    /// Real, nonnegative within `tol::NONNEG`, summing to one with `a_{d+1} = 0`.
    pub fn is_pmf(&self) -> bool {
        let tol = tol::alg(self.a.len());
        self.real().is_some_and(|a| {
            a.iter().all(|&x| x >= -tol::NONNEG)
                && (a.iter().sum::<f64>() - 1.0).abs() <= tol
                && a.last().is_some_and(|x| x.abs() <= tol)
        })
    }

    /// Real weights with round-off negatives clamped, `a_0..=a_d`.
    pub fn pmf(&self) -> Option<Vec<f64>> {
        if !self.is_pmf() {
            return None;
        }
        let a = self.real()?;
        Some(a[..a.len() - 1].iter().map(|x| x.max(0.0)).collect())
    }
}

/// `a_k = Λ(k, d) - Λ(k - 1, d)` with `Λ(-1, d) = 0`, `Λ(d + 1, d) = 1`.
pub fn mixture_weights(link: &LinkMatrix) -> MixtureWeights {
    weights_with_end(&link.target_column(), ONE, ONE)
}

/// Strong-stationary-time variant `a_k = [Λ(k, d) - Λ(k - 1, d)] / π(d)`,
/// with `Λ(d + 1, d) = π(d)` so that `a_{d+1}` again measures `π(d) - Λ(d, d)`.
pub fn sst_mixture_weights(link: &LinkMatrix, pi_d: f64) -> MixtureWeights {
    let pi = Complex64::new(pi_d, 0.0);
    weights_with_end(&link.target_column(), pi, pi)
}

fn weights_with_end(column: &[Complex64], end: Complex64, scale: Complex64) -> MixtureWeights {
    let mut a = Vec::with_capacity(column.len() + 1);
    let mut prev = ZERO;
    for &c in column.iter().chain(std::iter::once(&end)) {
        a.push((c - prev) / scale);
        prev = c;
    }
    MixtureWeights { a }
}

/// Everything the duality construction produces for one chain and start law.
#[derive(Debug, Clone)]
pub struct DualSystem {
    pub spectrum: SpectrumReport,
    pub polys: SpectralPolynomials,
    pub link: LinkMatrix,
    pub dual: DualKernel,
    pub weights: MixtureWeights,
}

impl DualSystem {
    /// Runs eigenvalues, spectral polynomials, link, dual and weights.
    pub fn build(p: &TransitionKernel, m0: &InitialLaw) -> Result<Self> {
        let spectrum = crate::spectral::eigenvalues(p)?;
        let polys = crate::spectral::spectral_polynomials(p, &spectrum)?;
        let link = build_link(p, &spectrum, &polys, m0)?;
        let dual = build_dual(&spectrum);
        let weights = mixture_weights(&link);
        Ok(DualSystem { spectrum, polys, link, dual, weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigenvalues, spectral_polynomials};

    fn kernel(rows: &[&[f64]]) -> TransitionKernel {
        TransitionKernel::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn bd3() -> TransitionKernel {
        kernel(&[&[0.5, 0.5, 0.0], &[0.25, 0.5, 0.25], &[0.0, 0.0, 1.0]])
    }

    fn gen3() -> TransitionKernel {
        kernel(&[&[0.5, 0.25, 0.25], &[0.25, 0.5, 0.25], &[0.0, 0.0, 1.0]])
    }

    fn assert_row(link: &LinkMatrix, i: usize, want: &[f64], eps: f64) {
        for (j, w) in want.iter().enumerate() {
            let z = link.entry(i, j);
            assert!((z - Complex64::new(*w, 0.0)).norm() <= eps, "({i},{j}) = {z}, want {w}");
        }
    }

    /// Rebuilds the link row by row from `λ_{i+1} = λ_i (P - θ_i I) / (1 - θ_i)`.
    fn link_by_recurrence(p: &TransitionKernel, s: &SpectrumReport, m0: &[f64]) -> DMatrix<Complex64> {
        let n = p.n();
        let mut rows = DMatrix::from_element(n, n, ZERO);
        for j in 0..n {
            rows[(0, j)] = Complex64::new(m0[j], 0.0);
        }
        for i in 0..n - 1 {
            let th = s.thetas()[i];
            for j in 0..n {
                let lp: Complex64 = (0..n).map(|k| rows[(i, k)] * p.entry(k, j)).sum();
                rows[(i + 1, j)] = (lp - rows[(i, j)] * th) / (ONE - th);
            }
        }
        rows
    }

    #[test]
    fn gen3_link_and_weights() {
        let p = gen3();
        let sys = DualSystem::build(&p, &InitialLaw::delta(3, 0)).unwrap();
        assert_row(&sys.link, 0, &[1.0, 0.0, 0.0], 0.0);
        assert_row(&sys.link, 1, &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-15);
        assert_row(&sys.link, 2, &[0.0, 0.0, 1.0], 1e-15);
        let a = sys.weights.real().unwrap();
        for (x, w) in a.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0, 0.0]) {
            assert!((x - w).abs() <= 1e-12);
        }
        assert!(sys.weights.is_pmf());
    }

    #[test]
    fn bd3_link_is_lower_triangular() {
        let sys = DualSystem::build(&bd3(), &InitialLaw::delta(3, 0)).unwrap();
        assert!(sys.link.lower_triangular && sys.link.stochastic);
        assert_row(&sys.link, 1, &[0.4142136, 0.5857864, 0.0], 1e-7);
        assert!((sys.link.entry(2, 2) - ONE).norm() < 1e-14);
        // diagonal formula p_01 ... p_{k-1,k} / prod (1 - θ_r)
        let th = sys.spectrum.real_nonunit().unwrap();
        let k2 = 0.5 * 0.25 / ((1.0 - th[0]) * (1.0 - th[1]));
        assert!((sys.link.entry(2, 2).re - k2).abs() < 1e-14);
    }

    #[test]
    fn first_row_is_initial_law() {
        let m0 = InitialLaw::new(vec![0.2, 0.3, 0.5]).unwrap();
        let sys = DualSystem::build(&gen3(), &m0).unwrap();
        assert_row(&sys.link, 0, m0.as_slice(), 0.0);
    }

    #[test]
    fn link_matches_recurrence_route() {
        for m0 in [vec![1.0, 0.0, 0.0], vec![0.2, 0.3, 0.5]] {
            let p = gen3();
            let s = eigenvalues(&p).unwrap();
            let q = spectral_polynomials(&p, &s).unwrap();
            let link = build_link(&p, &s, &q, &InitialLaw::new(m0.clone()).unwrap()).unwrap();
            let other = link_by_recurrence(&p, &s, &m0);
            assert!(linalg::inf_norm(&(link.matrix() - other)) <= tol::alg(3));
        }
    }

    #[test]
    fn dual_kernel_examples() {
        let s = eigenvalues(&gen3()).unwrap();
        let dual = build_dual(&s).to_real().unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[0.25, 0.75, 0.0, 0.0, 0.75, 0.25, 0.0, 0.0, 1.0]);
        assert!((dual - want).abs().max() < 1e-15);

        let p = 0.3;
        let dual = build_dual(&SpectrumReport::from_real(&[1.0 - p])).to_real().unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0 - p, p, 0.0, 1.0]);
        assert!((dual - want).abs().max() < 1e-15);

        let erg = kernel(&[&[0.5, 0.5, 0.0], &[0.25, 0.5, 0.25], &[0.0, 0.5, 0.5]]);
        let dual = build_dual(&eigenvalues(&erg).unwrap()).to_real().unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 1.0]);
        assert!((dual - want).abs().max() < 1e-15);
    }

    #[test]
    fn intertwining_examples() {
        let p = gen3();
        let sys = DualSystem::build(&p, &InitialLaw::delta(3, 0)).unwrap();
        let rep = check_intertwining(sys.link.matrix(), p.matrix(), sys.dual.matrix(), &[2, 5, 17]);
        assert!(rep.pass);
        assert!(rep.one_step <= 1e-12);

        let id = DMatrix::<Complex64>::identity(3, 3);
        let rep = check_intertwining(&id, p.matrix(), &linalg::to_complex(p.matrix()), &[3]);
        assert_eq!(rep.one_step, 0.0);

        let b = bd3();
        let sys = DualSystem::build(&b, &InitialLaw::delta(3, 0)).unwrap();
        let mut bad = sys.link.matrix().clone();
        bad[(1, 0)] += Complex64::new(0.01, 0.0);
        let rep = check_intertwining(&bad, b.matrix(), sys.dual.matrix(), &[]);
        assert!(rep.one_step > 1e-3);
        assert!(!rep.pass);
    }

    #[test]
    fn skip_free_weights_concentrate_on_d() {
        let sys = DualSystem::build(&bd3(), &InitialLaw::delta(3, 0)).unwrap();
        let a = sys.weights.real().unwrap();
        assert!(a[0].abs() < 1e-15 && a[1].abs() < 1e-15);
        assert!((a[2] - 1.0).abs() < 1e-14 && a[3].abs() < 1e-14);
    }

    #[test]
    fn absorbed_start_puts_all_weight_at_zero() {
        let sys = DualSystem::build(&gen3(), &InitialLaw::delta(3, 2)).unwrap();
        let a = sys.weights.real().unwrap();
        assert_eq!(a[0], 1.0);
        assert!(a[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn non_stochastic_link_refuses_conversion() {
        let link = LinkMatrix::from_real(&DMatrix::from_row_slice(2, 2, &[1.2, -0.2, 0.0, 1.0]));
        assert!(!link.stochastic);
        assert!(matches!(link.to_stochastic(), Err(Error::NotStochasticLink { .. })));
    }
}
