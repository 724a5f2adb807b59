//! Exact absorption and fastest-strong-stationary-time laws.
//!
//! Every law is carried by its pure-birth dual: holding probabilities
//! `θ_0, …, θ_{d-1}` and weights `a_0, …, a_d`, with
//!
//! ```text
//! P(T <= t) = Σ_k a_k Σ_{j >= k} P̂^t(0, j).
//! ```
//!
//! Continuous-time laws keep the uniformized dual (`θ_j = 1 - ν_j / Θ`) and
//! mix it against Poisson(`Θ t`) weights. Closed-form partial fractions are
//! never used, so repeated eigenvalues need no special handling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::chain::{self, stationary_law, InitialLaw, RateGenerator, TransitionKernel, UniformRate};
use crate::duality::{check_monotone_reversal, separation, sst_mixture_weights, DualKernel, DualSystem};
use crate::error::{Error, Result};
use crate::spectral::SpectrumReport;
use crate::tol;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Time axis of a law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "domain", rename_all = "kebab-case")]
pub enum TimeDomain {
    Discrete,
    /// Dual stored in uniformized form at the given rate.
    Continuous {
        uniform_rate: f64,
    },
}

/// Independent building blocks of the structural laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", content = "parameters", rename_all = "kebab-case")]
pub enum Factors {
    /// Geometric on `{1, 2, …}` with success probability `1 - θ` per entry.
    Geometric(Vec<f64>),
    /// Exponential with the listed rates.
    Exponential(Vec<f64>),
}

impl Factors {
    fn len(&self) -> usize {
        match self {
            Factors::Geometric(v) | Factors::Exponential(v) => v.len(),
        }
    }
}

/// Shape of a law, as exposed to callers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawKind {
    /// Convolution of Geometric(`1 - θ_j`) laws; `θ = 0` is the constant 1.
    GeomConv { thetas: Vec<f64> },
    /// Convolution of Exponential(`ν_j`) laws.
    HypoExp { rates: Vec<f64> },
    /// `Σ_k a_k` times the convolution of the first `k` factors; `k = 0` is
    /// unit mass at zero.
    Mixture { weights: Vec<f64>, factors: Factors },
    /// Only the CDF is available (complex spectrum or signed weights).
    NumericCdf,
}

/// Exact law of an absorption time or fastest strong stationary time.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionLaw {
    kind: LawKind,
    thetas: Vec<Complex64>,
    weights: Vec<Complex64>,
    domain: TimeDomain,
}

impl AbsorptionLaw {
    /// Builds a law from dual holding probabilities (`d` of them) and weights
    /// `a_0, …, a_d`, classifying it as structural when possible.
    pub fn from_dual(thetas: Vec<Complex64>, weights: Vec<Complex64>, domain: TimeDomain) -> Result<Self> {
        if weights.len() != thetas.len() + 1 {
            return Err(Error::DimensionMismatch { expected: thetas.len() + 1, got: weights.len() });
        }
        let kind = classify(&thetas, &weights, domain);
        Ok(AbsorptionLaw { kind, thetas, weights, domain })
    }

    /// Convolution of Geometric(`1 - θ_j`) laws.
    pub fn geometric_convolution(thetas: &[f64]) -> Self {
        let d = thetas.len();
        let mut w = vec![Complex64::new(0.0, 0.0); d + 1];
        w[d] = ONE;
        let th = thetas.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_dual(th, w, TimeDomain::Discrete).expect("lengths agree")
    }

    /// Convolution of Exponential(`ν_j`) laws.
    pub fn hypoexponential(rates: &[f64]) -> Self {
        let d = rates.len();
        let rate = rates.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(f64::MIN_POSITIVE)
            * (1.0 + tol::UNIFORMIZATION_MARGIN);
        let th = rates.iter().map(|&nu| Complex64::new(1.0 - nu / rate, 0.0)).collect();
        let mut w = vec![Complex64::new(0.0, 0.0); d + 1];
        w[d] = ONE;
        Self::from_dual(th, w, TimeDomain::Continuous { uniform_rate: rate }).expect("lengths agree")
    }

    /// `Σ_k a_k 𝒢(θ_0, …, θ_{k-1})`.
    pub fn geometric_mixture(weights: &[f64], thetas: &[f64]) -> Result<Self> {
        Self::from_dual(
            thetas.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            weights.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            TimeDomain::Discrete,
        )
    }

    /// Reinterprets a discrete law of a chain uniformized at `rate` as the
    /// law of the continuous-time chain.
    pub fn into_continuous(self, rate: f64) -> Result<Self> {
        if self.domain != TimeDomain::Discrete {
            return Err(Error::TimeDomain { expected: "discrete" });
        }
        Self::from_dual(self.thetas, self.weights, TimeDomain::Continuous { uniform_rate: rate })
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    /// Dual holding probabilities (uniformized in continuous time).
    pub fn thetas(&self) -> &[Complex64] {
        &self.thetas
    }

    /// Continuous-time rates `ν_j`, or `None` for a discrete law.
    pub fn rates(&self) -> Option<Vec<Complex64>> {
        match self.domain {
            TimeDomain::Discrete => None,
            TimeDomain::Continuous { uniform_rate } => {
                Some(self.thetas.iter().map(|&t| (ONE - t) * uniform_rate).collect())
            }
        }
    }

    /// Weights `a_0, …, a_d`.
    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    /// Real weights, when they are real.
    pub fn real_weights(&self) -> Option<Vec<f64>> {
        self.weights.iter().all(|z| z.im.abs() <= tol::IMAG).then(|| self.weights.iter().map(|z| z.re).collect())
    }

    /// Smallest time carrying positive mass: the index of the first nonzero
    /// weight in discrete time, zero in continuous time.
    pub fn support_offset(&self) -> u64 {
        match self.domain {
            TimeDomain::Continuous { .. } => 0,
            TimeDomain::Discrete => self.weights.iter().position(|z| z.norm() > tol::NONNEG).unwrap_or(0) as u64,
        }
    }

    /// `Σ_{k <= j} a_k`, the weight multiplying `P̂^t(0, j)`.
    fn cumulative_weights(&self) -> Vec<Complex64> {
        self.weights
            .iter()
            .scan(Complex64::new(0.0, 0.0), |acc, &a| {
                *acc += a;
                Some(*acc)
            })
            .collect()
    }

    /// Discrete-time dual CDF `F(0), …, F(t_max)` (uniformized steps in
    /// continuous time), before the imaginary-part check.
    fn dual_series(&self, t_max: usize) -> Vec<Complex64> {
        let mut series = Vec::with_capacity(t_max + 1);
        let mut state = DualState::new(self);
        series.push(state.cdf());
        for _ in 0..t_max {
            state.step();
            series.push(state.cdf());
        }
        series
    }

    /// `F(0), …, F(t_max)` for a discrete law.
    pub fn cdf_series(&self, t_max: usize) -> Result<Vec<f64>> {
        if self.domain != TimeDomain::Discrete {
            return Err(Error::TimeDomain { expected: "discrete" });
        }
        self.dual_series(t_max).into_iter().map(real_probability).collect()
    }

    /// `P(T <= t)`. Discrete laws use `floor(t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(self.cdf_grid(&[t])?[0])
    }

    /// CDF on a grid of times, sharing one dual propagation.
    pub fn cdf_grid(&self, times: &[f64]) -> Result<Vec<f64>> {
        match self.domain {
            TimeDomain::Discrete => {
                let idx: Vec<Option<usize>> = times.iter().map(|&t| (t >= 0.0).then(|| t.floor() as usize)).collect();
                let t_max = idx.iter().flatten().copied().max().unwrap_or(0);
                let series = self.dual_series(t_max);
                idx.iter()
                    .map(|i| match i {
                        Some(i) => real_probability(series[*i]),
                        None => Ok(0.0),
                    })
                    .collect()
            }
            TimeDomain::Continuous { uniform_rate } => {
                let mut state = DualState::new(self);
                let mut seq_re = vec![state.cdf().re];
                let mut seq_im = vec![state.cdf().im];
                let mut out = Vec::with_capacity(times.len());
                for &t in times {
                    if t < 0.0 {
                        out.push(0.0);
                        continue;
                    }
                    let lambda = uniform_rate * t;
                    let (first, w) = chain::poisson_weights(lambda);
                    let last = first + w.len() - 1;
                    while seq_re.len() <= last {
                        state.step();
                        let f = state.cdf();
                        seq_re.push(f.re);
                        seq_im.push(f.im);
                    }
                    let re: f64 = w.iter().enumerate().map(|(k, x)| x * seq_re[first + k]).sum();
                    let im: f64 = w.iter().enumerate().map(|(k, x)| x * seq_im[first + k]).sum();
                    out.push(real_probability(Complex64::new(re, im))?);
                }
                Ok(out)
            }
        }
    }

    /// `E[T]`.
    pub fn mean(&self) -> Result<f64> {
        let step_means: Vec<Complex64> = match self.rates() {
            None => self.thetas.iter().map(|&t| ONE / (ONE - t)).collect(),
            Some(rates) => rates.iter().map(|&nu| ONE / nu).collect(),
        };
        let mut prefix = Complex64::new(0.0, 0.0);
        let mut mean = self.weights[0] * prefix;
        for (k, m) in step_means.iter().enumerate() {
            prefix += m;
            mean += self.weights[k + 1] * prefix;
        }
        if mean.im.abs() > tol::IMAG * mean.norm().max(1.0) {
            return Err(Error::ImaginaryResidue { residue: mean.im.abs() });
        }
        Ok(mean.re)
    }

    /// Smallest `t` with `F(t) >= q` in discrete time; a bisection root of
    /// `F(t) = q` (to `tol::QUANTILE` on CDF values) in continuous time.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidInitial(format!("quantile level {q} outside [0, 1]")));
        }
        match self.domain {
            TimeDomain::Discrete => {
                let mut state = DualState::new(self);
                let mut t = 0u64;
                loop {
                    if real_probability(state.cdf())? >= q {
                        return Ok(t as f64);
                    }
                    if t >= tol::HORIZON_STEPS {
                        return Err(Error::Horizon(tol::HORIZON_STEPS));
                    }
                    state.step();
                    t += 1;
                }
            }
            TimeDomain::Continuous { .. } => {
                if self.cdf(0.0)? >= q {
                    return Ok(0.0);
                }
                let mut hi = self.mean()?.abs().max(1e-6);
                let mut doublings = 0;
                while self.cdf(hi)? < q {
                    hi *= 2.0;
                    doublings += 1;
                    if doublings > 60 {
                        return Err(Error::Horizon(tol::HORIZON_STEPS));
                    }
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let f = self.cdf(mid)?;
                    if (f - q).abs() <= tol::QUANTILE {
                        return Ok(mid);
                    }
                    if f < q {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON * hi {
                        break;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// Time by which all but `tol::HORIZON_MASS` of the mass has arrived.
    pub fn horizon(&self) -> Result<f64> {
        self.quantile(1.0 - tol::HORIZON_MASS)
    }

    /// Probability generating function `E u^T`, product form.
    pub fn pgf(&self, u: Complex64) -> Result<Complex64> {
        if self.domain != TimeDomain::Discrete {
            return Err(Error::TimeDomain { expected: "discrete" });
        }
        let max_theta = self.thetas.iter().map(|t| t.norm()).fold(0.0, f64::max);
        if u.norm() * max_theta >= 1.0 {
            return Err(Error::PoleAtU(format!("{u}")));
        }
        let mut prod = ONE;
        let mut total = self.weights[0];
        for (j, &th) in self.thetas.iter().enumerate() {
            prod *= (ONE - th) * u / (ONE - th * u);
            total += self.weights[j + 1] * prod;
        }
        Ok(total)
    }

    /// `E u^T = (1 - u) Σ_j A_j (I - u P̂)^{-1}(0, j)` with `A_j = Σ_{k<=j} a_k`,
    /// computed by a dense complex linear solve.
    pub fn pgf_resolvent(&self, u: Complex64) -> Result<Complex64> {
        if self.domain != TimeDomain::Discrete {
            return Err(Error::TimeDomain { expected: "discrete" });
        }
        if u.norm() >= 1.0 {
            return Err(Error::PoleAtU(format!("{u}")));
        }
        let n = self.thetas.len() + 1;
        let dual = self.dual_matrix();
        let a = DMatrix::<Complex64>::identity(n, n) - dual * u;
        // row 0 of the inverse: solve a^T x = e_0
        let mut e0 = DVector::from_element(n, Complex64::new(0.0, 0.0));
        e0[0] = ONE;
        let x = a.transpose().lu().solve(&e0).ok_or_else(|| Error::PoleAtU(format!("{u}")))?;
        let cum = self.cumulative_weights();
        Ok((ONE - u) * cum.iter().zip(x.iter()).map(|(c, x)| c * x).sum::<Complex64>())
    }

    /// Laplace transform `E e^{-sT}` of a continuous law.
    pub fn laplace(&self, s: Complex64) -> Result<Complex64> {
        let rates = self.rates().ok_or(Error::TimeDomain { expected: "continuous" })?;
        let min_re = rates.iter().map(|nu| nu.re).fold(f64::INFINITY, f64::min);
        if rates.iter().any(|nu| (nu + s).norm() == 0.0) || s.re <= -min_re {
            return Err(Error::PoleAtU(format!("{s}")));
        }
        let mut prod = ONE;
        let mut total = self.weights[0];
        for (j, &nu) in rates.iter().enumerate() {
            prod *= nu / (nu + s);
            total += self.weights[j + 1] * prod;
        }
        Ok(total)
    }

    /// The `(d + 1)`-state pure-birth kernel behind this law.
    pub fn dual_matrix(&self) -> DMatrix<Complex64> {
        let n = self.thetas.len() + 1;
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (i, &t) in self.thetas.iter().enumerate() {
            m[(i, i)] = t;
            m[(i, i + 1)] = ONE - t;
        }
        m[(n - 1, n - 1)] = ONE;
        m
    }

    /// One draw of `T`: a mixture index and independent geometric or
    /// exponential factors for structural laws, inverse-CDF otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.kind {
            LawKind::GeomConv { thetas } => Ok(thetas.iter().map(|&t| sample_geometric(t, rng)).sum()),
            LawKind::HypoExp { rates } => Ok(rates.iter().map(|&r| sample_exponential(r, rng)).sum()),
            LawKind::Mixture { weights, factors } => {
                let k = sample_index(weights, rng);
                Ok(match factors {
                    Factors::Geometric(th) => th[..k].iter().map(|&t| sample_geometric(t, rng)).sum(),
                    Factors::Exponential(r) => r[..k].iter().map(|&x| sample_exponential(x, rng)).sum(),
                })
            }
            LawKind::NumericCdf => {
                let u: f64 = rng.random();
                self.quantile(u)
            }
        }
    }

    /// Serializable description.
    pub fn summary(&self) -> LawSummary {
        LawSummary {
            shape: self.kind.clone(),
            time: self.domain,
            dual_thetas: self.thetas.clone(),
            weights: self.weights.clone(),
            mean: self.mean().ok(),
            support_offset: self.support_offset(),
        }
    }
}

/// JSON-friendly view of a law.
#[derive(Debug, Clone, Serialize)]
pub struct LawSummary {
    pub shape: LawKind,
    pub time: TimeDomain,
    /// Holding probabilities of the dual (uniformized in continuous time).
    pub dual_thetas: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    pub mean: Option<f64>,
    pub support_offset: u64,
}

fn classify(thetas: &[Complex64], weights: &[Complex64], domain: TimeDomain) -> LawKind {
    let d = thetas.len();
    let real_thetas = thetas.iter().all(|t| t.im == 0.0);
    let real_weights = weights.iter().all(|w| w.im.abs() <= tol::IMAG);
    if !real_thetas || !real_weights {
        return LawKind::NumericCdf;
    }
    let a: Vec<f64> = weights.iter().map(|w| w.re).collect();
    let sum: f64 = a.iter().sum();
    if a.iter().any(|&x| x < -tol::NONNEG) || (sum - 1.0).abs() > tol::alg(d + 1) {
        return LawKind::NumericCdf;
    }
    let a: Vec<f64> = a.iter().map(|x| x.max(0.0)).collect();
    let concentrated = a[..d].iter().all(|&x| x <= tol::NONNEG);
    let factors = match domain {
        TimeDomain::Discrete => {
            let th: Vec<f64> = thetas.iter().map(|t| t.re).collect();
            if th.iter().any(|&x| x < 0.0) {
                return LawKind::NumericCdf;
            }
            Factors::Geometric(th)
        }
        TimeDomain::Continuous { uniform_rate } => {
            let rates: Vec<f64> = thetas.iter().map(|t| uniform_rate * (1.0 - t.re)).collect();
            if rates.iter().any(|&x| x <= 0.0) {
                return LawKind::NumericCdf;
            }
            Factors::Exponential(rates)
        }
    };
    match (concentrated, factors) {
        (true, Factors::Geometric(thetas)) => LawKind::GeomConv { thetas },
        (true, Factors::Exponential(rates)) => LawKind::HypoExp { rates },
        (false, factors) => {
            debug_assert_eq!(factors.len(), d);
            LawKind::Mixture { weights: a, factors }
        }
    }
}

fn real_probability(z: Complex64) -> Result<f64> {
    if z.im.abs() > tol::IMAG {
        return Err(Error::ImaginaryResidue { residue: z.im.abs() });
    }
    Ok(z.re.clamp(0.0, 1.0))
}

/// Row 0 of `P̂^t` together with the cumulative weights.
struct DualState<'a> {
    thetas: &'a [Complex64],
    cum: Vec<Complex64>,
    v: Vec<Complex64>,
}

impl<'a> DualState<'a> {
    fn new(law: &'a AbsorptionLaw) -> Self {
        let n = law.thetas.len() + 1;
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[0] = ONE;
        DualState { thetas: &law.thetas, cum: law.cumulative_weights(), v }
    }

    fn step(&mut self) {
        let d = self.thetas.len();
        let mut carry = Complex64::new(0.0, 0.0);
        for j in 0..d {
            let stay = self.v[j] * self.thetas[j];
            let go = self.v[j] - stay;
            self.v[j] = stay + carry;
            carry = go;
        }
        self.v[d] += carry;
    }

    fn cdf(&self) -> Complex64 {
        self.v.iter().zip(&self.cum).map(|(v, c)| v * c).sum()
    }
}

/// `(I - u P̂)^{-1}(i, j)` in closed form.
pub fn resolvent_entry(dual: &DualKernel, u: Complex64, i: usize, j: usize) -> Result<Complex64> {
    let thetas = dual.thetas();
    if i > j {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut denom = ONE;
    for &t in &thetas[i..=j] {
        let f = ONE - t * u;
        if f.norm() == 0.0 {
            return Err(Error::PoleAtU(format!("{u}")));
        }
        denom *= f;
    }
    let mut numer = ONE;
    for &t in &thetas[i..j] {
        numer *= (ONE - t) * u;
    }
    Ok(numer / denom)
}

fn sample_geometric<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    if theta <= 0.0 {
        return 1.0;
    }
    // P(G > k) = θ^k
    let u: f64 = 1.0 - rng.random::<f64>();
    1.0 + (u.ln() / theta.ln()).floor()
}

fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    -u.ln() / rate
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// Law of the absorption time at the target from `m0`.
pub fn absorption_law(p: &TransitionKernel, m0: &InitialLaw) -> Result<AbsorptionLaw> {
    if !p.class().target_absorbing {
        return Err(Error::TargetNotAbsorbing(p.d()));
    }
    m0.check_len(p.n())?;
    let sys = DualSystem::build(p, m0)?;
    law_from_system(&sys.spectrum, sys.weights.components().to_vec(), TimeDomain::Discrete)
}

/// Absorption law from state 0 of a skip-free chain: fails with
/// `ZeroSuperdiagonal` if some `p_{i,i+1}` vanishes.
pub fn absorption_law_skip_free(p: &TransitionKernel) -> Result<AbsorptionLaw> {
    p.require_skip_free()?;
    absorption_law(p, &InitialLaw::delta(p.n(), 0))
}

fn law_from_system(spectrum: &SpectrumReport, weights: Vec<Complex64>, domain: TimeDomain) -> Result<AbsorptionLaw> {
    AbsorptionLaw::from_dual(spectrum.nonunit().to_vec(), weights, domain)
}

/// Law of a fastest strong stationary time of an ergodic chain from `m0`.
///
/// Requires the separation minimizer to be the last state: accepted when the
/// time reversal is stochastically monotone and `m0 / π` is nonincreasing,
/// otherwise checked directly on the law's horizon.
pub fn sst_law(p: &TransitionKernel, m0: &InitialLaw) -> Result<AbsorptionLaw> {
    if !p.class().ergodic {
        return Err(Error::NotErgodic("fastest strong stationary times need an ergodic chain".into()));
    }
    m0.check_len(p.n())?;
    let pi = stationary_law(p)?;
    let sys = DualSystem::build(p, m0)?;
    let weights = sst_mixture_weights(&sys.link, pi[p.d()]);
    let law = law_from_system(&sys.spectrum, weights.components().to_vec(), TimeDomain::Discrete)?;

    let monotone = check_monotone_reversal(p)?;
    let ratios: Vec<f64> = m0.as_slice().iter().zip(&pi).map(|(m, p)| m / p).collect();
    let ratio_decreasing = ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if monotone.monotone && ratio_decreasing {
        return Ok(law);
    }
    let horizon = law.horizon()? as usize;
    let prof = separation(p, m0, horizon)?;
    match (prof.first_violation, monotone.witness) {
        (None, _) => Ok(law),
        (Some(_), Some((x, y))) => Err(Error::MonotoneHypothesisFails(x, y)),
        (Some(t), None) => Err(Error::SeparationArgmin { t, state: prof.argmin_state[t] }),
    }
}

/// Law of the hitting time of the target for a continuous-time chain,
/// through the uniformized kernel.
pub fn hypoexp_law(g: &RateGenerator, m0: &InitialLaw) -> Result<AbsorptionLaw> {
    if !g.class().target_absorbing {
        return Err(Error::TargetNotAbsorbing(g.d()));
    }
    m0.check_len(g.n())?;
    let (p, rate) = chain::uniformize(g, UniformRate::Auto)?;
    absorption_law(&p, m0)?.into_continuous(rate)
}

/// Skip-free continuous-time route from state 0; fails with
/// `ZeroSuperdiagonal` if some `g_{i,i+1}` vanishes.
pub fn hypoexp_law_skip_free(g: &RateGenerator) -> Result<AbsorptionLaw> {
    g.require_skip_free()?;
    hypoexp_law(g, &InitialLaw::delta(g.n(), 0))
}

/// Fastest strong stationary time of an ergodic continuous-time chain, via
/// the uniformized kernel.
pub fn sst_law_continuous(g: &RateGenerator, m0: &InitialLaw) -> Result<AbsorptionLaw> {
    let (p, rate) = chain::uniformize(g, UniformRate::Auto)?;
    sst_law(&p, m0)?.into_continuous(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{mean_absorption_oracle, power_cdf_oracle};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kernel(rows: &[&[f64]]) -> TransitionKernel {
        TransitionKernel::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn bd3() -> TransitionKernel {
        kernel(&[&[0.5, 0.5, 0.0], &[0.25, 0.5, 0.25], &[0.0, 0.0, 1.0]])
    }

    fn gen3() -> TransitionKernel {
        kernel(&[&[0.5, 0.25, 0.25], &[0.25, 0.5, 0.25], &[0.0, 0.0, 1.0]])
    }

    fn erg3() -> TransitionKernel {
        kernel(&[&[0.5, 0.5, 0.0], &[0.25, 0.5, 0.25], &[0.0, 0.5, 0.5]])
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn bd3_geometric_convolution() {
        let law = absorption_law(&bd3(), &InitialLaw::delta(3, 0)).unwrap();
        let LawKind::GeomConv { thetas } = law.kind() else { panic!("{:?}", law.kind()) };
        let f2 = law.cdf(2.0).unwrap();
        assert!((f2 - (1.0 - thetas[0]) * (1.0 - thetas[1])).abs() < 1e-15);
        assert!((f2 - 0.125).abs() < 1e-14);
        assert!((law.mean().unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(law.support_offset(), 2);
    }

    #[test]
    fn gen3_mixture() {
        let p = gen3();
        let m0 = InitialLaw::delta(3, 0);
        let law = absorption_law(&p, &m0).unwrap();
        let LawKind::Mixture { weights, .. } = law.kind() else { panic!("{:?}", law.kind()) };
        assert!((weights[1] - 1.0 / 3.0).abs() < 1e-12 && (weights[2] - 2.0 / 3.0).abs() < 1e-12);
        assert!((law.mean().unwrap() - 4.0).abs() < 1e-12);
        assert!((law.mean().unwrap() - mean_absorption_oracle(&p, &m0).unwrap()).abs() < 1e-12);
        let oracle = power_cdf_oracle(&p, &m0, 60).unwrap();
        let exact = law.cdf_series(60).unwrap();
        for (a, b) in exact.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(law.support_offset(), 1);
    }

    #[test]
    fn two_state_is_geometric() {
        let p = 0.3;
        let law = absorption_law(&kernel(&[&[1.0 - p, p], &[0.0, 1.0]]), &InitialLaw::delta(2, 0)).unwrap();
        for t in 0..10 {
            let want = 1.0 - (1.0 - p).powi(t);
            assert!((law.cdf(t as f64).unwrap() - want).abs() < 1e-15);
        }
        let u = c(0.6);
        let want = c(p) * u / (ONE - c(1.0 - p) * u);
        assert!((law.pgf(u).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn pgf_forms_agree_and_normalize() {
        for p in [bd3(), gen3()] {
            let law = absorption_law(&p, &InitialLaw::delta(3, 0)).unwrap();
            assert!((law.pgf(ONE).unwrap() - ONE).norm() < 1e-14);
            for u in [c(0.5), Complex64::new(0.3, 0.4), Complex64::new(-0.7, 0.1)] {
                let a = law.pgf(u).unwrap();
                let b = law.pgf_resolvent(u).unwrap();
                assert!((a - b).norm() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bd3_pgf_matches_truncated_series() {
        let p = bd3();
        let m0 = InitialLaw::delta(3, 0);
        let law = absorption_law(&p, &m0).unwrap();
        let f = power_cdf_oracle(&p, &m0, 400).unwrap();
        let u: f64 = 0.5;
        let series: f64 = (1..=400).map(|t| (f[t] - f[t - 1]) * u.powi(t as i32)).sum();
        assert!((law.pgf(c(u)).unwrap().re - series).abs() < 1e-14);
    }

    #[test]
    fn pole_is_reported() {
        let law = AbsorptionLaw::geometric_convolution(&[0.5]);
        assert!(matches!(law.pgf(c(2.0)), Err(Error::PoleAtU(_))));
        let dual = crate::duality::build_dual(&SpectrumReport::from_real(&[0.5]));
        assert!(matches!(resolvent_entry(&dual, c(2.0), 0, 1), Err(Error::PoleAtU(_))));
    }

    #[test]
    fn resolvent_entries() {
        let dual = crate::duality::build_dual(&SpectrumReport::from_real(&[0.25, 0.75]));
        let u = c(0.5);
        assert!((resolvent_entry(&dual, u, 0, 0).unwrap() - ONE / (ONE - c(0.25) * u)).norm() < 1e-15);
        assert!((resolvent_entry(&dual, u, 0, 2).unwrap() - c(6.0 / 35.0)).norm() < 1e-15);
        assert_eq!(resolvent_entry(&dual, c(0.0), 0, 2).unwrap(), c(0.0));
        // dense solve cross-check
        let a = DMatrix::<Complex64>::identity(3, 3) - dual.matrix() * u;
        let inv = a.try_inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((resolvent_entry(&dual, u, i, j).unwrap() - inv[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn erg3_sst_law() {
        let p = erg3();
        let law = sst_law(&p, &InitialLaw::delta(3, 0)).unwrap();
        let LawKind::GeomConv { thetas } = law.kind() else { panic!("{:?}", law.kind()) };
        assert!(thetas[0].abs() < 1e-15 && (thetas[1] - 0.5).abs() < 1e-15);
        assert!(law.cdf(1.0).unwrap().abs() < 1e-14);
        assert!((law.cdf(2.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((law.pgf(ONE).unwrap() - ONE).norm() < 1e-14);
        // u^2 / (2 - u)
        let u = c(0.4);
        assert!((law.pgf(u).unwrap() - u * u / (c(2.0) - u)).norm() < 1e-14);
        assert!((law.mean().unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn stationary_start_gives_zero_sst() {
        let p = erg3();
        let pi = stationary_law(&p).unwrap();
        let law = sst_law(&p, &InitialLaw::new(pi).unwrap()).unwrap();
        assert!((law.cdf(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(law.mean().unwrap().abs() < 1e-12);
    }

    #[test]
    fn non_monotone_chain_fails_hypothesis() {
        let p = kernel(&[&[0.6, 0.1, 0.3], &[0.1, 0.5, 0.4], &[0.3, 0.4, 0.3]]);
        match sst_law(&p, &InitialLaw::delta(3, 0)) {
            Err(Error::MonotoneHypothesisFails(1, 2)) | Ok(_) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_superdiagonal_is_reported() {
        let p = kernel(&[&[0.5, 0.0, 0.5], &[0.5, 0.5, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(matches!(absorption_law_skip_free(&p), Err(Error::ZeroSuperdiagonal { index: 0 })));
        assert!(absorption_law(&p, &InitialLaw::delta(3, 0)).is_ok());
    }

    #[test]
    fn hypoexp_examples() {
        let g = RateGenerator::from_rows(&[vec![-2.0, 2.0, 0.0], vec![0.0, -1.0, 1.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let law = hypoexp_law_skip_free(&g).unwrap();
        let LawKind::HypoExp { rates } = law.kind() else { panic!("{:?}", law.kind()) };
        assert!((rates[0] - 2.0).abs() < 1e-12 && (rates[1] - 1.0).abs() < 1e-12);
        for t in [0.1f64, 0.5, 1.0, 2.5, 7.0] {
            let want = 1.0 - 2.0 * (-t).exp() + (-2.0 * t).exp();
            assert!((law.cdf(t).unwrap() - want).abs() < 1e-12);
        }
        assert!((law.mean().unwrap() - 1.5).abs() < 1e-12);

        let nu = 1.7;
        let g = RateGenerator::from_rows(&[vec![-nu, nu], vec![0.0, 0.0]]).unwrap();
        let law = hypoexp_law_skip_free(&g).unwrap();
        for t in [0.2, 1.0, 3.0] {
            assert!((law.cdf(t).unwrap() - (1.0 - (-nu * t).exp())).abs() < 1e-12);
        }
        assert!((law.laplace(c(0.5)).unwrap() - c(nu / (nu + 0.5))).norm() < 1e-12);

        let g = RateGenerator::from_rows(&[vec![-1.0, 1.0, 0.0], vec![1.0, -2.0, 1.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let law = hypoexp_law_skip_free(&g).unwrap();
        let rates = law.rates().unwrap();
        let s5 = 5f64.sqrt();
        assert!((rates[0].re - (3.0 + s5) / 2.0).abs() < 1e-12);
        assert!((rates[1].re - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((law.mean().unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_sst_matches_separation() {
        let g = RateGenerator::from_rows(&[vec![-1.0, 1.0, 0.0], vec![1.0, -2.0, 1.0], vec![0.0, 1.0, -1.0]]).unwrap();
        let m0 = InitialLaw::delta(3, 0);
        let law = sst_law_continuous(&g, &m0).unwrap();
        let times: Vec<f64> = (0..30).map(|k| 0.25 * k as f64).collect();
        let s = crate::duality::separation_continuous(&g, &m0, &times).unwrap();
        let f = law.cdf_grid(&times).unwrap();
        for (a, b) in f.iter().zip(&s) {
            assert!((a - (1.0 - b)).abs() < 1e-10, "{a} vs {}", 1.0 - b);
        }
    }

    #[test]
    fn quantiles() {
        let law = AbsorptionLaw::geometric_convolution(&[0.0, 0.5]);
        assert_eq!(law.quantile(0.0).unwrap(), 0.0);
        assert_eq!(law.quantile(0.5).unwrap(), 2.0);
        assert_eq!(law.quantile(0.75).unwrap(), 3.0);
        let law = AbsorptionLaw::hypoexponential(&[1.0]);
        let q = law.quantile(0.5).unwrap();
        assert!((q - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn degenerate_component_has_unit_mass_at_zero() {
        let law = AbsorptionLaw::geometric_mixture(&[1.0, 0.0], &[0.3]).unwrap();
        assert_eq!(law.cdf(0.0).unwrap(), 1.0);
        assert_eq!(law.mean().unwrap(), 0.0);
    }

    #[test]
    fn means_of_structural_laws() {
        assert!((AbsorptionLaw::geometric_convolution(&[0.0, 0.5]).mean().unwrap() - 3.0).abs() < 1e-15);
        assert!((AbsorptionLaw::hypoexponential(&[2.0, 1.0]).mean().unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn sample_mean_is_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let law = absorption_law(&gen3(), &InitialLaw::delta(3, 0)).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng).unwrap()).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((m - 4.0).abs() < 4.0 * se, "mean {m}, se {se}");
    }

    #[test]
    fn complex_spectrum_gives_numeric_cdf() {
        let p = kernel(&[&[0.0, 0.9, 0.0, 0.1], &[0.0, 0.0, 0.9, 0.1], &[0.9, 0.0, 0.0, 0.1], &[0.0, 0.0, 0.0, 1.0]]);
        let m0 = InitialLaw::delta(4, 0);
        let law = absorption_law(&p, &m0).unwrap();
        assert_eq!(law.kind(), &LawKind::NumericCdf);
        let oracle = power_cdf_oracle(&p, &m0, 80).unwrap();
        let exact = law.cdf_series(80).unwrap();
        for (a, b) in exact.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((law.mean().unwrap() - mean_absorption_oracle(&p, &m0).unwrap()).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(law.sample(&mut rng).unwrap() >= 1.0);
    }
}
