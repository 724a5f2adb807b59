use std::collections::BTreeMap;

use serde::Serialize;

use super::stats::{self, ChiSquareTest};
use super::{CouplingMode, CouplingSetup, CouplingTrace, SimulationConfig};
use crate::dist::{AbsorptionLaw, TimeDomain};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// Minimum observations for a conditional-law cell or a segment group.
pub const MIN_CELL: u64 = 50;

/// Number of grid times probed for conditional laws in continuous time.
const CONTINUOUS_GRID: usize = 20;

/// Kolmogorov–Smirnov comparison of the empirical absorption time with the
/// exact law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsGate {
    pub n: usize,
    pub statistic: f64,
    pub critical: f64,
    pub p_value: f64,
    pub pass: bool,
}

/// Per-cell chi-square tests of `X_t` given the dual state, Bonferroni
/// corrected across the cells that could be tested.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareGate {
    /// Cells with at least [`MIN_CELL`] observations.
    pub cells_eligible: usize,
    /// Eligible cells with at least two pooled bins.
    pub cells_tested: usize,
    pub threshold: f64,
    pub min_p_value: Option<f64>,
    /// `(time or grid index, dual state)` of the smallest p-value.
    pub worst_cell: Option<(u64, usize)>,
    pub pass: bool,
}

/// Chi-square of the empirical law of `L + 1` against the weights `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfGate {
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub test: Option<ChiSquareTest>,
    pub pass: bool,
}

/// KS test of the time spent at dual level `level` among traces with `L = l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentKs {
    pub l: i64,
    pub level: usize,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentGate {
    pub groups: Vec<SegmentKs>,
    pub threshold: f64,
    pub pass: bool,
}

/// Outcome of a Monte Carlo verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub mode: CouplingMode,
    pub n_samples: usize,
    pub seed: u64,
    pub alpha: f64,
    pub horizon: u64,
    /// Traces stopped by the horizon; they are excluded from the
    /// distributional gates.
    pub horizon_hits: usize,
    pub ks: KsGate,
    /// Steps with `X_t > X̂_t` (pure-birth duals only).
    pub domination_violations: u64,
    /// Steps with `Λ(dual, X_t) = 0`.
    pub link_support_violations: u64,
    /// Completed traces whose absorption epochs differ.
    pub absorption_mismatches: u64,
    pub conditional_law: ChiSquareGate,
    pub l_pmf: PmfGate,
    pub segments: SegmentGate,
    pub empirical_mean: f64,
    pub exact_mean: Option<f64>,
    pub tolerances: Tolerances,
    pub pass: bool,
}

/// Checks `traces` against `law` and the coupling invariants of `setup`.
pub fn verify(
    setup: &CouplingSetup,
    law: &AbsorptionLaw,
    traces: &[CouplingTrace],
    config: &SimulationConfig,
) -> Result<VerifyReport> {
    if traces.is_empty() {
        return Err(Error::InsufficientSamples("no traces".into()));
    }
    let alpha = config.alpha;
    let done: Vec<&CouplingTrace> = traces.iter().filter(|t| !t.horizon_hit).collect();
    let horizon_hits = traces.len() - done.len();

    let mut domination_violations = 0;
    let mut link_support_violations = 0;
    for tr in traces {
        for (k, (&x, &y)) in tr.primal_path.iter().zip(&tr.dual_path).enumerate() {
            if setup.mode != CouplingMode::General && x > y {
                domination_violations += 1;
            }
            let before_dual_absorption = tr.t_dual.is_none_or(|t| tr.time_at(k) <= t);
            if before_dual_absorption && setup.link[(y, x)] <= 0.0 {
                link_support_violations += 1;
            }
        }
    }
    let absorption_mismatches = done.iter().filter(|t| t.t_primal != t.t_dual).count() as u64;

    let samples: Vec<f64> = done.iter().filter_map(|t| t.t_primal).collect();
    let ks = ks_gate(law, &samples, alpha)?;
    let conditional_law = conditional_gate(setup, law, &done, alpha)?;
    let l_pmf = pmf_gate(setup, &done, alpha);
    let segments = segment_gate(setup, &done, alpha);

    let empirical_mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
    let pass = ks.pass
        && domination_violations == 0
        && link_support_violations == 0
        && absorption_mismatches == 0
        && conditional_law.pass
        && l_pmf.pass
        && segments.pass;
    Ok(VerifyReport {
        mode: setup.mode,
        n_samples: traces.len(),
        seed: config.seed,
        alpha,
        horizon: config.horizon,
        horizon_hits,
        ks,
        domination_violations,
        link_support_violations,
        absorption_mismatches,
        conditional_law,
        l_pmf,
        segments,
        empirical_mean,
        exact_mean: law.mean().ok(),
        tolerances: Tolerances::default(),
        pass,
    })
}

fn ks_gate(law: &AbsorptionLaw, samples: &[f64], alpha: f64) -> Result<KsGate> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::InsufficientSamples("every trace reached the horizon".into()));
    }
    let statistic = match law.domain() {
        TimeDomain::Discrete => {
            let t_max = samples.iter().fold(0.0f64, |m, &t| m.max(t)) as usize;
            let mut counts = vec![0u64; t_max + 1];
            for &t in samples {
                counts[t as usize] += 1;
            }
            stats::ks_statistic_integer(&counts, &law.cdf_series(t_max)?)
        }
        TimeDomain::Continuous { .. } => {
            let mut sorted = samples.to_vec();
            sorted.sort_by(f64::total_cmp);
            stats::ks_statistic_sorted(&law.cdf_grid(&sorted)?)
        }
    };
    let critical = stats::ks_critical(n, alpha);
    Ok(KsGate { n, statistic, critical, p_value: stats::ks_p_value(statistic, n), pass: statistic < critical })
}

fn conditional_gate(
    setup: &CouplingSetup,
    law: &AbsorptionLaw,
    done: &[&CouplingTrace],
    alpha: f64,
) -> Result<ChiSquareGate> {
    let n = setup.n();
    let mut cells: BTreeMap<(u64, usize), Vec<u64>> = BTreeMap::new();
    let mut record = |key: (u64, usize), x: usize| cells.entry(key).or_insert_with(|| vec![0; n])[x] += 1;
    match law.domain() {
        TimeDomain::Discrete => {
            for tr in done {
                for (t, (&x, &y)) in tr.primal_path.iter().zip(&tr.dual_path).enumerate() {
                    if !setup.dual_absorbed(y) {
                        record((t as u64, y), x);
                    }
                }
            }
        }
        TimeDomain::Continuous { .. } => {
            let span = law.quantile(0.95)?;
            let grid: Vec<f64> = (0..CONTINUOUS_GRID).map(|k| span * k as f64 / CONTINUOUS_GRID as f64).collect();
            for tr in done {
                for (k, &t) in grid.iter().enumerate() {
                    let i = tr.index_at(t);
                    let y = tr.dual_path[i];
                    if !setup.dual_absorbed(y) {
                        record((k as u64, y), tr.primal_path[i]);
                    }
                }
            }
        }
    }
    let eligible: Vec<(&(u64, usize), &Vec<u64>)> =
        cells.iter().filter(|(_, c)| c.iter().sum::<u64>() >= MIN_CELL).collect();
    if eligible.is_empty() {
        return Err(Error::InsufficientSamples(format!("no (time, dual state) cell has {MIN_CELL} observations")));
    }
    let tests: Vec<((u64, usize), ChiSquareTest)> = eligible
        .iter()
        .filter_map(|(key, counts)| {
            let row: Vec<f64> = setup.link.row(key.1).iter().copied().collect();
            stats::chi_square_pooled(counts, &row).map(|t| (**key, t))
        })
        .collect();
    let threshold = alpha / tests.len().max(1) as f64;
    let worst = tests.iter().min_by(|a, b| a.1.p_value.total_cmp(&b.1.p_value));
    Ok(ChiSquareGate {
        cells_eligible: eligible.len(),
        cells_tested: tests.len(),
        threshold,
        min_p_value: worst.map(|w| w.1.p_value),
        worst_cell: worst.map(|w| w.0),
        pass: tests.iter().all(|(_, t)| t.p_value >= threshold),
    })
}

fn pmf_gate(setup: &CouplingSetup, done: &[&CouplingTrace], alpha: f64) -> PmfGate {
    let mut observed = vec![0u64; setup.weights.len()];
    for tr in done {
        let k = (tr.l + 1) as usize;
        if k < observed.len() {
            observed[k] += 1;
        }
    }
    let total: u64 = observed.iter().sum();
    let expected: Vec<f64> = setup.weights.iter().map(|a| a * total as f64).collect();
    let test = stats::chi_square_pooled(&observed, &setup.weights);
    let in_support = observed.iter().zip(&setup.weights).all(|(&o, &a)| o == 0 || a > 0.0);
    let pass = total as usize == done.len()
        && match &test {
            Some(t) => t.p_value >= alpha && in_support,
            None => in_support,
        };
    PmfGate { observed, expected, test, pass }
}

fn segment_gate(setup: &CouplingSetup, done: &[&CouplingTrace], alpha: f64) -> SegmentGate {
    let mut groups: BTreeMap<(i64, usize), Vec<f64>> = BTreeMap::new();
    for tr in done {
        let durations = tr.level_durations();
        if tr.l < 0 || durations.len() != tr.l as usize + 1 {
            continue;
        }
        for (k, dur) in durations.into_iter().enumerate() {
            groups.entry((tr.l, k)).or_default().push(dur);
        }
    }
    let continuous = setup.mode == CouplingMode::Continuous;
    let mut out = Vec::new();
    for ((l, level), mut xs) in groups {
        if (xs.len() as u64) < MIN_CELL {
            continue;
        }
        let n = xs.len();
        let statistic = if continuous {
            let nu = setup.rates[level];
            xs.sort_by(f64::total_cmp);
            let f: Vec<f64> = xs.iter().map(|&t| 1.0 - (-nu * t).exp()).collect();
            stats::ks_statistic_sorted(&f)
        } else {
            let theta = setup.thetas[level];
            let t_max = xs.iter().fold(0.0f64, |m, &t| m.max(t)) as usize;
            let mut counts = vec![0u64; t_max + 1];
            for &t in &xs {
                counts[t as usize] += 1;
            }
            let cdf: Vec<f64> = (0..=t_max).map(|t| 1.0 - theta.powi(t as i32)).collect();
            stats::ks_statistic_integer(&counts, &cdf)
        };
        out.push(SegmentKs { l, level, n, statistic, p_value: stats::ks_p_value(statistic, n) });
    }
    let threshold = alpha / out.len().max(1) as f64;
    let pass = out.iter().all(|g| g.p_value >= threshold);
    SegmentGate { groups: out, threshold, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{InitialLaw, RateGenerator};
    use crate::coupling::tests::{bd3, gen3};
    use crate::coupling::{run_verification, simulate};

    fn config(samples: usize) -> SimulationConfig {
        SimulationConfig { samples, seed: 7, ..Default::default() }
    }

    #[test]
    fn bd3_passes() {
        let setup = CouplingSetup::skip_free(&bd3()).unwrap();
        let rep = run_verification(&setup, &config(20_000)).unwrap();
        assert!(rep.pass, "{rep:#?}");
        assert_eq!(rep.domination_violations, 0);
        assert_eq!(rep.absorption_mismatches, 0);
    }

    #[test]
    fn perturbed_law_fails_ks() {
        let setup = CouplingSetup::skip_free(&bd3()).unwrap();
        let cfg = config(20_000);
        let traces = simulate(&setup, &cfg).unwrap();
        let mut thetas = setup.thetas.clone();
        thetas[0] += 0.1;
        let wrong = AbsorptionLaw::geometric_convolution(&thetas);
        let rep = verify(&setup, &wrong, &traces, &cfg).unwrap();
        assert!(!rep.ks.pass);
        assert!(!rep.pass);
    }

    #[test]
    fn few_traces_are_insufficient() {
        let setup = CouplingSetup::skip_free(&bd3()).unwrap();
        assert!(matches!(run_verification(&setup, &config(10)), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn gen3_general_passes() {
        let setup = CouplingSetup::general(&gen3(), &InitialLaw::delta(3, 0)).unwrap();
        let rep = run_verification(&setup, &config(20_000)).unwrap();
        assert!(rep.pass, "{rep:#?}");
        assert_eq!(rep.l_pmf.observed[0], 0);
        assert!(rep.segments.groups.iter().any(|g| g.l == 1 && g.level == 1));
    }

    #[test]
    fn continuous_birth_death_passes() {
        let g = RateGenerator::from_rows(&[vec![-1.0, 1.0, 0.0], vec![1.0, -2.0, 1.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let setup = CouplingSetup::continuous(&g).unwrap();
        let rep = run_verification(&setup, &config(20_000)).unwrap();
        assert!(rep.pass, "{rep:#?}");
        assert_eq!(rep.segments.groups.len(), 2);
    }
}
