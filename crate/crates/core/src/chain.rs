//! Validated kernels and generators, structural classification, stationary
//! laws and the brute-force oracles every exact law is checked against.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tol;

/// Structural flags read off the support of a kernel or generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainClass {
    /// Upward jumps are at most one step.
    pub skip_free_up: bool,
    /// Tridiagonal support.
    pub birth_death: bool,
    pub target_absorbing: bool,
    /// The target is reachable from every state.
    pub target_accessible: bool,
    /// Irreducible and (in discrete time) aperiodic.
    pub ergodic: bool,
    /// Every entry `(i, i + 1)`, `i < d`, is positive.
    pub superdiag_positive: bool,
}

impl ChainClass {
    fn from_support(support: &[Vec<bool>], target: usize, discrete: bool) -> Self {
        let n = support.len();
        let skip_free_up = (0..n).all(|i| (i + 2..n).all(|j| !support[i][j]));
        let birth_death = skip_free_up && (0..n).all(|i| (0..i.saturating_sub(1)).all(|j| !support[i][j]));
        let target_absorbing = (0..n).all(|j| j == target || !support[target][j]);
        let reach_target = reaches(support, target);
        let target_accessible = reach_target.iter().all(|&r| r);
        let irreducible = (0..n).all(|s| reaches(support, s).iter().all(|&r| r));
        let ergodic = irreducible && (!discrete || period(support) == 1);
        let superdiag_positive = (0..n - 1).all(|i| support[i][i + 1]);
        ChainClass { skip_free_up, birth_death, target_absorbing, target_accessible, ergodic, superdiag_positive }
    }

    /// Human-readable summary, e.g. `"skip-free birth–death, absorbing target"`.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        let shape = match (self.skip_free_up, self.birth_death) {
            (_, true) => "skip-free birth–death",
            (true, false) => "skip-free",
            _ => "general",
        };
        parts.push(shape.to_string());
        if self.target_absorbing {
            parts.push("absorbing target".into());
        }
        if self.ergodic {
            parts.push("ergodic".into());
        }
        if self.superdiag_positive {
            parts.push("superdiagonal positive".into());
        }
        parts.join(", ")
    }
}

/// `reach[i]` is true when `target` is reachable from `i` (including `i == target`).
fn reaches(support: &[Vec<bool>], target: usize) -> Vec<bool> {
    let n = support.len();
    let mut reach = vec![false; n];
    reach[target] = true;
    let mut stack = vec![target];
    while let Some(j) = stack.pop() {
        for i in 0..n {
            if !reach[i] && support[i][j] {
                reach[i] = true;
                stack.push(i);
            }
        }
    }
    reach
}

/// Period of an irreducible support graph.
fn period(support: &[Vec<bool>]) -> usize {
    let n = support.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut g = 0usize;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !support[i][j] {
                continue;
            }
            if level[j] == usize::MAX {
                level[j] = level[i] + 1;
                queue.push_back(j);
            } else {
                let diff = (level[i] + 1).abs_diff(level[j]);
                g = gcd(g, diff);
            }
        }
    }
    g
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Moves `target` to the last position, keeping the other states in order.
/// Returns the permutation `order[new] = old`.
fn target_last_order(n: usize, target: usize) -> Vec<usize> {
    (0..n).filter(|&i| i != target).chain(std::iter::once(target)).collect()
}

fn permute(raw: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let n = order.len();
    DMatrix::from_fn(n, n, |i, j| raw[(order[i], order[j])])
}

fn check_square(raw: &DMatrix<f64>, target: usize) -> Result<()> {
    let (rows, cols) = raw.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows < 2 {
        return Err(Error::TooFewStates(rows));
    }
    if target >= rows {
        return Err(Error::TargetOutOfRange { target, n: rows });
    }
    Ok(())
}

/// A validated discrete-time transition matrix on states `0..=d`, target `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    matrix: DMatrix<f64>,
    class: ChainClass,
    labels: Vec<usize>,
}

impl TransitionKernel {
    /// Validates `raw` with the given target, relabeling so the target is
    /// the last state. Rows within [`tol::ROW`] of stochastic are clamped
    /// and renormalized; anything further off is rejected.
    pub fn new(raw: DMatrix<f64>, target: usize) -> Result<Self> {
        check_square(&raw, target)?;
        let n = raw.nrows();
        let order = target_last_order(n, target);
        let mut m = permute(&raw, &order);
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let v = m[(i, j)];
                if !(-tol::ROW..=1.0 + tol::ROW).contains(&v) {
                    return Err(Error::NonStochastic {
                        row: order[i],
                        reason: format!("entry ({}, {}) = {v} outside [0, 1]", order[i], order[j]),
                    });
                }
                let v = v.clamp(0.0, 1.0);
                m[(i, j)] = v;
                sum += v;
            }
            if (sum - 1.0).abs() > tol::ROW {
                return Err(Error::NonStochastic { row: order[i], reason: format!("row sum {sum} differs from 1") });
            }
            if sum != 1.0 {
                for j in 0..n {
                    m[(i, j)] /= sum;
                }
            }
        }
        let support: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] > 0.0).collect()).collect();
        let class = ChainClass::from_support(&support, n - 1, true);
        if !class.target_accessible {
            let reach = reaches(&support, n - 1);
            let from = reach.iter().position(|&r| !r).unwrap_or(0);
            return Err(Error::TargetNotAccessible { target, from: order[from] });
        }
        Ok(TransitionKernel { matrix: m, class, labels: order })
    }

    /// Convenience constructor from nested rows with the last state as target.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::NotSquare { rows: n, cols: 0 });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let target = n.saturating_sub(1);
        Self::new(DMatrix::from_row_slice(n, cols, &flat), target)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn class(&self) -> &ChainClass {
        &self.class
    }

    /// Number of states `d + 1`.
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Index of the target state.
    pub fn d(&self) -> usize {
        self.n() - 1
    }

    /// `labels()[i]` is the index state `i` had in the raw input.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// The leading principal `d`-by-`d` block (target row and column removed).
    pub fn transient_block(&self) -> DMatrix<f64> {
        let d = self.d();
        self.matrix.view((0, 0), (d, d)).into_owned()
    }

    /// Checks the preconditions of the skip-free analysis: every `p_{i,i+1}`
    /// positive and no upward jump longer than one step.
    pub fn require_skip_free(&self) -> Result<()> {
        if let Some(index) = (0..self.d()).find(|&i| self.matrix[(i, i + 1)] == 0.0) {
            return Err(Error::ZeroSuperdiagonal { index });
        }
        let n = self.n();
        for i in 0..n {
            if let Some(j) = (i + 2..n).find(|&j| self.matrix[(i, j)] > 0.0) {
                return Err(Error::NotSkipFree { from: i, to: j });
            }
        }
        Ok(())
    }

    fn require_absorbing(&self) -> Result<()> {
        if self.class.target_absorbing {
            Ok(())
        } else {
            Err(Error::TargetNotAbsorbing(self.d()))
        }
    }
}

/// A validated continuous-time generator on states `0..=d`, target `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGenerator {
    matrix: DMatrix<f64>,
    class: ChainClass,
    labels: Vec<usize>,
}

impl RateGenerator {
    /// Validates `raw`: off-diagonal rates nonnegative, rows summing to zero
    /// within `tol::ROW * max(1, |g_ii|)`. The diagonal is reset to minus the
    /// off-diagonal row sum.
    pub fn new(raw: DMatrix<f64>, target: usize) -> Result<Self> {
        check_square(&raw, target)?;
        let n = raw.nrows();
        let order = target_last_order(n, target);
        let mut m = permute(&raw, &order);
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                let v = m[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidGenerator { row: order[i], reason: "non-finite entry".into() });
                }
                if i != j {
                    if v < 0.0 {
                        return Err(Error::InvalidGenerator {
                            row: order[i],
                            reason: format!("negative rate {v} at column {}", order[j]),
                        });
                    }
                    off += v;
                }
            }
            let diag = m[(i, i)];
            if (off + diag).abs() > tol::ROW * diag.abs().max(1.0) {
                return Err(Error::InvalidGenerator {
                    row: order[i],
                    reason: format!("row sum {} differs from 0", off + diag),
                });
            }
            m[(i, i)] = -off;
        }
        let support: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i != j && m[(i, j)] > 0.0).collect()).collect();
        let class = ChainClass::from_support(&support, n - 1, false);
        if !class.target_accessible {
            let reach = reaches(&support, n - 1);
            let from = reach.iter().position(|&r| !r).unwrap_or(0);
            return Err(Error::TargetNotAccessible { target, from: order[from] });
        }
        Ok(RateGenerator { matrix: m, class, labels: order })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::NotSquare { rows: n, cols: 0 });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, cols, &flat), n.saturating_sub(1))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn class(&self) -> &ChainClass {
        &self.class
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn d(&self) -> usize {
        self.n() - 1
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Largest exit rate `max_i |g_ii|`.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.n()).map(|i| self.matrix[(i, i)].abs()).fold(0.0, f64::max)
    }

    pub fn require_skip_free(&self) -> Result<()> {
        if let Some(index) = (0..self.d()).find(|&i| self.matrix[(i, i + 1)] == 0.0) {
            return Err(Error::ZeroSuperdiagonal { index });
        }
        let n = self.n();
        for i in 0..n {
            if let Some(j) = (i + 2..n).find(|&j| self.matrix[(i, j)] > 0.0) {
                return Err(Error::NotSkipFree { from: i, to: j });
            }
        }
        Ok(())
    }
}

/// Initial distribution `m0` as a probability row vector.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLaw(Vec<f64>);

impl InitialLaw {
    pub fn new(m0: Vec<f64>) -> Result<Self> {
        if m0.iter().any(|&x| !x.is_finite() || x < -tol::ROW) {
            return Err(Error::InvalidInitial("entries must be nonnegative".into()));
        }
        let mut m0: Vec<f64> = m0.into_iter().map(|x| x.max(0.0)).collect();
        let sum: f64 = m0.iter().sum();
        if (sum - 1.0).abs() > tol::ROW {
            return Err(Error::InvalidInitial(format!("entries sum to {sum}")));
        }
        if sum != 1.0 {
            m0.iter_mut().for_each(|x| *x /= sum);
        }
        Ok(InitialLaw(m0))
    }

    /// Unit mass at `state`.
    pub fn delta(n: usize, state: usize) -> Self {
        let mut v = vec![0.0; n];
        v[state] = 1.0;
        InitialLaw(v)
    }

    /// Reorders an initial law given in raw labels to match a relabeled chain.
    pub fn relabeled(&self, labels: &[usize]) -> Result<Self> {
        self.check_len(labels.len())?;
        Ok(InitialLaw(labels.iter().map(|&old| self.0[old]).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether this is unit mass at `state`.
    pub fn is_delta(&self, state: usize) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| if i == state { x == 1.0 } else { x == 0.0 })
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n, got: self.0.len() })
        }
    }
}

/// Stationary distribution of an ergodic kernel.
pub fn stationary_law(p: &TransitionKernel) -> Result<Vec<f64>> {
    if !p.class.ergodic {
        return Err(Error::NotErgodic("kernel is reducible or periodic".into()));
    }
    let n = p.n();
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    let mut a = p.matrix.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = linalg::solve(a, b)?;
    let mut pi: Vec<f64> = pi.iter().map(|&x| x.max(0.0)).collect();
    let sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= sum);
    Ok(pi)
}

/// `F(t) = (m0 P^t)(d)` for `t = 0..=t_max`, by repeated vector-matrix products.
pub fn power_cdf_oracle(p: &TransitionKernel, m0: &InitialLaw, t_max: usize) -> Result<Vec<f64>> {
    p.require_absorbing()?;
    m0.check_len(p.n())?;
    let d = p.d();
    let mut v = m0.as_slice().to_vec();
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(v[d]);
    for _ in 0..t_max {
        v = linalg::vec_mat(&v, &p.matrix);
        out.push(v[d]);
    }
    Ok(out)
}

/// Expected absorption time `m0' (I - P')^{-1} 1` through the fundamental matrix.
pub fn mean_absorption_oracle(p: &TransitionKernel, m0: &InitialLaw) -> Result<f64> {
    p.require_absorbing()?;
    m0.check_len(p.n())?;
    let d = p.d();
    let a = DMatrix::identity(d, d) - p.transient_block();
    let x = linalg::solve(a, DVector::from_element(d, 1.0))?;
    Ok(m0.as_slice()[..d].iter().zip(x.iter()).map(|(m, x)| m * x).sum())
}

/// Uniformization rate selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UniformRate {
    /// `max_i |g_ii| * (1 + margin)`.
    Auto,
    Fixed(f64),
}

/// `P = I + G / rate`, the kernel of the chain observed at the epochs of a
/// rate-`rate` Poisson process.
pub fn uniformize(g: &RateGenerator, rate: UniformRate) -> Result<(TransitionKernel, f64)> {
    let required = g.max_exit_rate();
    let theta = match rate {
        UniformRate::Auto if required == 0.0 => 1.0,
        UniformRate::Auto => required * (1.0 + tol::UNIFORMIZATION_MARGIN),
        UniformRate::Fixed(theta) => {
            if theta.is_nan() || theta <= 0.0 || theta < required {
                return Err(Error::ThetaTooSmall { theta, required });
            }
            theta
        }
    };
    let n = g.n();
    let mut m = DMatrix::identity(n, n) + &g.matrix / theta;
    // exact zeros on the diagonal when theta equals an exit rate
    for i in 0..n {
        if m[(i, i)].abs() < 1e-15 {
            m[(i, i)] = 0.0;
        }
    }
    let mut p = TransitionKernel::new(m, n - 1)?;
    p.labels = g.labels.clone();
    Ok((p, theta))
}

/// Normalized Poisson(`lambda`) weights covering all but a negligible tail.
///
/// Weights are generated outward from the mode by the ratio recursion and
/// normalized by their sum, so no factorials or exponentials of large
/// arguments are formed. Returns `(first_index, weights)`.
pub fn poisson_weights(lambda: f64) -> (usize, Vec<f64>) {
    if lambda <= 0.0 {
        return (0, vec![1.0]);
    }
    // relative cutoff; the tails beyond it decay at least geometrically
    const CUTOFF: f64 = 1e-22;
    let mode = lambda.floor() as usize;
    let mut down = Vec::new();
    let mut w = 1.0;
    let mut k = mode;
    while k > 0 {
        w *= k as f64 / lambda;
        if w < CUTOFF {
            break;
        }
        down.push(w);
        k -= 1;
    }
    let first = mode - down.len();
    let mut weights: Vec<f64> = down.into_iter().rev().collect();
    weights.push(1.0);
    let mut w = 1.0;
    let mut k = mode;
    loop {
        k += 1;
        w *= lambda / k as f64;
        if w < CUTOFF && k as f64 > lambda {
            break;
        }
        weights.push(w);
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|x| *x /= sum);
    (first, weights)
}

/// Mixes a discrete-time sequence `f(n)` against Poisson(`lambda`) weights.
/// `f` is extended on demand through `extend`.
pub(crate) fn poisson_mix<F>(lambda: f64, seq: &mut Vec<f64>, mut extend: F) -> f64
where
    F: FnMut(&mut Vec<f64>, usize),
{
    let (first, weights) = poisson_weights(lambda);
    let last = first + weights.len() - 1;
    if seq.len() <= last {
        extend(seq, last + 1);
    }
    weights.iter().enumerate().map(|(k, w)| w * seq[first + k]).sum()
}

/// `F(t) = (m0 e^{tG})(d)` on a grid of times, via the uniformized Poisson series.
pub fn ctmc_cdf_oracle(g: &RateGenerator, m0: &InitialLaw, times: &[f64]) -> Result<Vec<f64>> {
    m0.check_len(g.n())?;
    if !g.class.target_absorbing {
        return Err(Error::TargetNotAbsorbing(g.d()));
    }
    let (p, theta) = uniformize(g, UniformRate::Auto)?;
    let d = p.d();
    let mut state = m0.as_slice().to_vec();
    let mut seq = vec![state[d]];
    let mut extend = |seq: &mut Vec<f64>, len: usize| {
        while seq.len() < len {
            state = linalg::vec_mat(&state, p.matrix());
            seq.push(state[d]);
        }
    };
    Ok(times.iter().map(|&t| poisson_mix(theta * t.max(0.0), &mut seq, &mut extend).clamp(0.0, 1.0)).collect())
}

/// Law of the continuous-time chain at each of `times`, via the uniformized
/// Poisson series.
pub fn ctmc_distribution_oracle(g: &RateGenerator, m0: &InitialLaw, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    m0.check_len(g.n())?;
    let (p, theta) = uniformize(g, UniformRate::Auto)?;
    let mut powers = vec![m0.as_slice().to_vec()];
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let (first, weights) = poisson_weights(theta * t.max(0.0));
        while powers.len() < first + weights.len() {
            let next = linalg::vec_mat(powers.last().expect("nonempty"), p.matrix());
            powers.push(next);
        }
        let mut v = vec![0.0; g.n()];
        for (k, w) in weights.iter().enumerate() {
            for (acc, x) in v.iter_mut().zip(&powers[first + k]) {
                *acc += w * x;
            }
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bd3() -> TransitionKernel {
        TransitionKernel::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.25, 0.5, 0.25], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    fn gen3() -> TransitionKernel {
        TransitionKernel::from_rows(&[vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    fn erg3() -> TransitionKernel {
        TransitionKernel::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.25, 0.5, 0.25], vec![0.0, 0.5, 0.5]]).unwrap()
    }

    #[test]
    fn identity_kernel_target_not_accessible() {
        let err = TransitionKernel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::TargetNotAccessible { target: 1, from: 0 }));
    }

    #[test]
    fn bd3_classification() {
        let c = *bd3().class();
        assert!(c.skip_free_up && c.birth_death && c.target_absorbing && c.superdiag_positive);
        assert!(!c.ergodic);
    }

    #[test]
    fn gen3_is_not_skip_free() {
        let c = *gen3().class();
        assert!(!c.skip_free_up);
        assert!(c.target_absorbing);
    }

    #[test]
    fn non_stochastic_rows_rejected_with_index() {
        let err = TransitionKernel::from_rows(&[vec![0.5, 0.6], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonStochastic { row: 0, .. }));
        let err = TransitionKernel::from_rows(&[vec![1.2, -0.2], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonStochastic { row: 0, .. }));
    }

    #[test]
    fn near_stochastic_rows_are_renormalized() {
        let p = TransitionKernel::from_rows(&[vec![0.5, 0.5 + 5e-13], vec![0.0, 1.0]]).unwrap();
        let s: f64 = p.matrix().row(0).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn relabeling_moves_target_last() {
        let raw = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.5]);
        let p = TransitionKernel::new(raw, 0).unwrap();
        assert_eq!(p.labels(), &[1, 2, 0]);
        assert_eq!(p.entry(2, 2), 1.0);
        assert_eq!(p.entry(0, 2), 0.5);
    }

    #[test]
    fn stationary_laws() {
        let pi = stationary_law(&erg3()).unwrap();
        for (a, b) in pi.iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        let flip = TransitionKernel::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(stationary_law(&flip), Err(Error::NotErgodic(_))));
        let half = TransitionKernel::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let pi = stationary_law(&half).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn power_oracle_examples() {
        let m0 = InitialLaw::delta(3, 0);
        let f = power_cdf_oracle(&bd3(), &m0, 2).unwrap();
        assert_eq!(f[0], 0.0);
        assert!((f[2] - 0.125).abs() < 1e-16);
        let f = power_cdf_oracle(&gen3(), &m0, 1).unwrap();
        assert!((f[1] - 0.25).abs() < 1e-16);
        assert!(matches!(power_cdf_oracle(&erg3(), &m0, 3), Err(Error::TargetNotAbsorbing(2))));
    }

    #[test]
    fn power_oracle_converges_to_one() {
        let f = power_cdf_oracle(&bd3(), &InitialLaw::delta(3, 0), 400).unwrap();
        assert!(f.windows(2).all(|w| w[1] >= w[0]));
        assert!(1.0 - f[400] < 1e-9);
    }

    #[test]
    fn mean_oracle_examples() {
        let m0 = InitialLaw::delta(3, 0);
        assert!((mean_absorption_oracle(&bd3(), &m0).unwrap() - 8.0).abs() < 1e-12);
        assert!((mean_absorption_oracle(&gen3(), &m0).unwrap() - 4.0).abs() < 1e-12);
        let one = TransitionKernel::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(mean_absorption_oracle(&one, &InitialLaw::delta(2, 0)).unwrap(), 1.0);
    }

    #[test]
    fn uniformize_examples() {
        let g = RateGenerator::from_rows(&[vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let (p, theta) = uniformize(&g, UniformRate::Fixed(1.0)).unwrap();
        assert_eq!(theta, 1.0);
        assert_eq!(p.matrix().as_slice(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]).as_slice());
        let (p, _) = uniformize(&g, UniformRate::Fixed(2.0)).unwrap();
        assert_eq!(p.entry(0, 0), 0.5);
        assert_eq!(p.entry(0, 1), 0.5);
        assert!(matches!(uniformize(&g, UniformRate::Fixed(0.5)), Err(Error::ThetaTooSmall { .. })));
        let g3 = RateGenerator::from_rows(&[vec![-2.0, 2.0, 0.0], vec![1.0, -3.0, 2.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let (_, theta) = uniformize(&g3, UniformRate::Auto).unwrap();
        assert!((theta - 3.15).abs() < 1e-15);
    }

    #[test]
    fn invalid_generators() {
        let err = RateGenerator::from_rows(&[vec![-1.0, 2.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidGenerator { row: 0, .. }));
        let err = RateGenerator::from_rows(&[vec![1.0, -1.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidGenerator { row: 0, .. }));
    }

    #[test]
    fn poisson_weights_sum_and_mean() {
        for lambda in [0.0, 0.3, 4.0, 57.5, 2500.0] {
            let (first, w) = poisson_weights(lambda);
            let sum: f64 = w.iter().sum();
            let mean: f64 = w.iter().enumerate().map(|(k, x)| (first + k) as f64 * x).sum();
            assert!((sum - 1.0).abs() < 1e-14);
            assert!((mean - lambda).abs() < 1e-9 * lambda.max(1.0));
        }
    }

    #[test]
    fn ctmc_oracle_examples() {
        let g = RateGenerator::from_rows(&[vec![-1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let f = ctmc_cdf_oracle(&g, &InitialLaw::delta(2, 0), &[0.0, 1.0]).unwrap();
        assert_eq!(f[0], 0.0);
        assert!((f[1] - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let g = RateGenerator::from_rows(&[vec![-2.0, 2.0, 0.0], vec![0.0, -1.0, 1.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let times: Vec<f64> = (0..30).map(|k| 0.25 * k as f64).collect();
        let f = ctmc_cdf_oracle(&g, &InitialLaw::delta(3, 0), &times).unwrap();
        for (t, v) in times.iter().zip(f) {
            let exact = 1.0 - 2.0 * (-t).exp() + (-2.0 * t).exp();
            assert!((v - exact).abs() < 1e-12, "t={t}");
        }
        let started = InitialLaw::new(vec![0.3, 0.0, 0.7]).unwrap();
        assert!((ctmc_cdf_oracle(&g, &started, &[0.0]).unwrap()[0] - 0.7).abs() < 1e-15);
    }
}
