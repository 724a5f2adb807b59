//! Sample-path couplings of a chain with its dual, and a Monte Carlo harness
//! that checks them against the exact laws.
//!
//! Three constructions are provided:
//!
//! * [`CouplingMode::SkipFree`]: the pure-birth dual `X̂` of a skip-free
//!   chain started at 0. `X_t <= X̂_t` and both absorb together.
//! * [`CouplingMode::General`]: the modified dual `X̄` on the `(d + 1)`-state
//!   kernel `P̄ = B + R`, for any absorbing chain whose link is stochastic.
//! * [`CouplingMode::Continuous`]: the exponential-race coupling for a
//!   skip-free generator.
//!
//! Every trace draws from its own ChaCha stream, selected by the trace index,
//! so results do not depend on how traces are spread over threads.

mod continuous;
mod discrete;
pub mod stats;
mod verify;

pub use continuous::simulate_coupled_continuous;
pub use discrete::{promotion_probability, simulate_coupled_discrete, simulate_general_dual};
pub use verify::{verify, ChiSquareGate, KsGate, PmfGate, SegmentGate, SegmentKs, VerifyReport};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{self, InitialLaw, RateGenerator, TransitionKernel, UniformRate};
use crate::dist::{absorption_law, AbsorptionLaw};
use crate::duality::{build_modified_dual, DualSystem};
use crate::error::{Error, Result};
use crate::tol;

/// Which dual is coupled to the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    SkipFree,
    General,
    Continuous,
}

/// One coupled sample path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingTrace {
    /// `X` after each step (discrete) or each event (continuous).
    pub primal_path: Vec<usize>,
    /// `X̂` or `X̄`, aligned with `primal_path`.
    pub dual_path: Vec<usize>,
    /// Event epochs in continuous time, aligned with the paths. Empty in
    /// discrete time, where the index is the time.
    pub times: Vec<f64>,
    /// Absorption epoch of `X`; `None` if the horizon was reached first.
    pub t_primal: Option<f64>,
    /// Absorption epoch of the dual.
    pub t_dual: Option<f64>,
    /// Largest dual level before absorption, `-1` if the dual starts absorbed.
    pub l: i64,
    pub horizon_hit: bool,
}

impl CouplingTrace {
    /// Epoch of entry `k` of the paths.
    pub fn time_at(&self, k: usize) -> f64 {
        if self.times.is_empty() {
            k as f64
        } else {
            self.times[k]
        }
    }

    /// Index of the entry in force at time `t` (continuous traces).
    pub fn index_at(&self, t: f64) -> usize {
        if self.times.is_empty() {
            return (t.max(0.0) as usize).min(self.primal_path.len() - 1);
        }
        self.times.partition_point(|&s| s <= t).max(1) - 1
    }

    /// Time spent at each dual level `0..=L`, in order of visit.
    pub fn level_durations(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.l < 0 || self.horizon_hit {
            return out;
        }
        let mut start = self.time_at(0);
        for k in 1..self.dual_path.len() {
            if self.dual_path[k] != self.dual_path[k - 1] {
                let t = self.time_at(k);
                out.push(t - start);
                start = t;
            }
        }
        out
    }
}

/// Monte Carlo run settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub samples: usize,
    pub seed: u64,
    /// Step (discrete) or event (continuous) cap per trace.
    pub horizon: u64,
    /// Significance per gate.
    pub alpha: f64,
    /// Worker threads; `None` uses the global pool.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { samples: 100_000, seed: 0, horizon: tol::HORIZON_STEPS, alpha: 0.01, jobs: None }
    }
}

/// Everything a simulator and the verifier need for one chain.
#[derive(Debug, Clone)]
pub struct CouplingSetup {
    pub mode: CouplingMode,
    /// Kernel (discrete modes) or generator (continuous).
    pub matrix: DMatrix<f64>,
    pub m0: Vec<f64>,
    /// Stochastic link whose rows are the conditional laws of `X` given the dual.
    pub link: DMatrix<f64>,
    /// Dual kernel `P̂` or `P̄` (discrete modes).
    pub dual: DMatrix<f64>,
    /// Dual holding probabilities `θ_0, …, θ_{d-1}`.
    pub thetas: Vec<f64>,
    /// Dual birth rates `ν_0, …, ν_{d-1}` (continuous mode).
    pub rates: Vec<f64>,
    /// Initial dual law.
    pub dual_m0: Vec<f64>,
    /// First absorbing dual level.
    pub d_bar: usize,
    /// Mixture weights `a_0, …, a_d`.
    pub weights: Vec<f64>,
    /// Exact law of the absorption time.
    pub law: AbsorptionLaw,
}

impl CouplingSetup {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn d(&self) -> usize {
        self.n() - 1
    }

    /// Skip-free chain started at 0, coupled to its pure-birth dual.
    pub fn skip_free(p: &TransitionKernel) -> Result<Self> {
        p.require_skip_free()?;
        let n = p.n();
        let m0 = InitialLaw::delta(n, 0);
        let sys = DualSystem::build(p, &m0)?;
        let thetas = sys
            .spectrum
            .real_nonunit()
            .filter(|_| sys.spectrum.all_nonneg_real)
            .ok_or_else(|| Error::NotStochasticLink { min_entry: min_theta(sys.spectrum.nonunit()) })?;
        let link = sys.link.to_stochastic()?;
        let dual = sys.dual.to_real().expect("real spectrum");
        let weights = sys.weights.pmf().ok_or(Error::NotStochasticLink { min_entry: sys.link.min_entry })?;
        Ok(CouplingSetup {
            mode: CouplingMode::SkipFree,
            matrix: p.matrix().clone(),
            m0: m0.as_slice().to_vec(),
            link,
            dual,
            thetas,
            rates: Vec::new(),
            dual_m0: delta(n, 0),
            d_bar: n - 1,
            weights,
            law: absorption_law(p, &m0)?,
        })
    }

    /// Any absorbing chain, coupled to the modified dual `P̄ = B + R`.
    pub fn general(p: &TransitionKernel, m0: &InitialLaw) -> Result<Self> {
        if !p.class().target_absorbing {
            return Err(Error::TargetNotAbsorbing(p.d()));
        }
        m0.check_len(p.n())?;
        let sys = DualSystem::build(p, m0)?;
        let thetas = sys
            .spectrum
            .real_nonunit()
            .filter(|_| sys.spectrum.all_nonneg_real)
            .ok_or_else(|| Error::NotStochasticLink { min_entry: min_theta(sys.spectrum.nonunit()) })?;
        let md = build_modified_dual(&sys.link, &sys.spectrum, m0)?;
        let link = md.lambda_bar.to_stochastic()?;
        let dual = md.p_bar_stochastic()?;
        let weights = sys.weights.pmf().ok_or(Error::NotStochasticLink { min_entry: sys.link.min_entry })?;
        Ok(CouplingSetup {
            mode: CouplingMode::General,
            matrix: p.matrix().clone(),
            m0: m0.as_slice().to_vec(),
            link,
            dual,
            thetas,
            rates: Vec::new(),
            dual_m0: md.m_bar0.clone(),
            d_bar: md.d_bar,
            weights,
            law: absorption_law(p, m0)?,
        })
    }

    /// Skip-free generator started at 0, coupled to its pure-birth dual by an
    /// exponential race.
    pub fn continuous(g: &RateGenerator) -> Result<Self> {
        g.require_skip_free()?;
        let n = g.n();
        let m0 = InitialLaw::delta(n, 0);
        let (p, rate) = chain::uniformize(g, UniformRate::Auto)?;
        let sys = DualSystem::build(&p, &m0)?;
        let thetas = sys.spectrum.real_nonunit().ok_or(Error::NotStochasticLink { min_entry: f64::NAN })?;
        let rates: Vec<f64> = thetas.iter().map(|t| rate * (1.0 - t)).collect();
        let link = sys.link.to_stochastic()?;
        let weights = sys.weights.pmf().ok_or(Error::NotStochasticLink { min_entry: sys.link.min_entry })?;
        Ok(CouplingSetup {
            mode: CouplingMode::Continuous,
            matrix: g.matrix().clone(),
            m0: m0.as_slice().to_vec(),
            link,
            dual: DMatrix::zeros(0, 0),
            thetas,
            rates,
            dual_m0: delta(n, 0),
            d_bar: n - 1,
            weights,
            law: absorption_law(&p, &m0)?.into_continuous(rate)?,
        })
    }

    /// Absorbing dual levels.
    pub fn dual_absorbed(&self, level: usize) -> bool {
        level >= self.d_bar
    }

    /// Simulates trace `index` from its own stream.
    pub fn simulate_one(&self, seed: u64, index: u64, horizon: u64) -> CouplingTrace {
        let mut rng = trace_rng(seed, index);
        match self.mode {
            CouplingMode::SkipFree => simulate_coupled_discrete(self, &mut rng, horizon),
            CouplingMode::General => simulate_general_dual(self, &mut rng, horizon),
            CouplingMode::Continuous => simulate_coupled_continuous(self, &mut rng, horizon),
        }
    }
}

fn delta(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn min_theta(thetas: &[num_complex::Complex64]) -> f64 {
    thetas.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}

/// The generator for trace `index` under `seed`.
pub fn trace_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates `config.samples` traces, in trace-index order.
pub fn simulate(setup: &CouplingSetup, config: &SimulationConfig) -> Result<Vec<CouplingTrace>> {
    let run = || {
        (0..config.samples as u64)
            .into_par_iter()
            .map(|i| setup.simulate_one(config.seed, i, config.horizon))
            .collect::<Vec<_>>()
    };
    match config.jobs {
        None => Ok(run()),
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::InsufficientSamples(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

/// Simulates and verifies in one call.
pub fn run_verification(setup: &CouplingSetup, config: &SimulationConfig) -> Result<VerifyReport> {
    let traces = simulate(setup, config)?;
    verify(setup, &setup.law, &traces, config)
}
