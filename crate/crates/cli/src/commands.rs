//! Subcommand implementations.

use serde_json::{json, Value};
use ssd_core::chain::{
    self, ctmc_cdf_oracle, mean_absorption_oracle, power_cdf_oracle, stationary_law, TransitionKernel, UniformRate,
};
use ssd_core::coupling::{self, CouplingMode, CouplingSetup, CouplingTrace, SimulationConfig};
use ssd_core::dist::{self, AbsorptionLaw};
use ssd_core::duality::{
    build_modified_dual, check_intertwining, check_monotone_reversal, separation, separation_continuous,
    sst_mixture_weights, DualSystem,
};
use ssd_core::spectral::classify_spectrum;

use crate::report::{self, complex_matrix, complex_vec, num, pretty, to_value, with_header};
use crate::spec_file::{Chain, ChainSpecFile, LoadedChain};
use crate::{CliError, Command, Format, Mode, MonteCarloArgs, Output, ReportArgs, ValidateArgs};

const QUANTILE_DEFAULT: f64 = 0.9999;
const INTERTWINING_POWERS: [usize; 2] = [2, 5];

pub fn dispatch(cmd: &Command) -> Result<Output, CliError> {
    match cmd {
        Command::Validate(a) => validate(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Dual(a) => dual(a),
        Command::Absorption(a) => absorption(a),
        Command::Sst(a) => sst(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    }
}

fn load(path: &str) -> Result<LoadedChain, CliError> {
    ChainSpecFile::read(path)?.load()
}

fn ok(text: String) -> Output {
    Output { text, gates_pass: true }
}

/// The kernel the spectral machinery runs on: the chain itself, or its
/// uniformization together with the rate.
fn kernel(loaded: &LoadedChain) -> Result<(TransitionKernel, Option<f64>), CliError> {
    Ok(match &loaded.chain {
        Chain::Discrete(p) => (p.clone(), None),
        Chain::Continuous(g) => {
            let (p, rate) = chain::uniformize(g, UniformRate::Auto)?;
            (p, Some(rate))
        }
    })
}

fn validate(a: &ValidateArgs) -> Result<Output, CliError> {
    let loaded = load(&a.file)?;
    let class = loaded.class();
    if a.json {
        let body = json!({ "class": to_value(class), "description": class.describe() });
        Ok(ok(pretty(&with_header("validate", &loaded.labels, body))))
    } else {
        Ok(ok(format!("{}\n", class.describe())))
    }
}

fn spectrum(a: &ReportArgs) -> Result<Output, CliError> {
    let loaded = load(&a.file)?;
    let (p, rate) = kernel(&loaded)?;
    let spec = ssd_core::spectral::eigenvalues(&p)?;
    let polys = ssd_core::spectral::spectral_polynomials(&p, &spec)?;
    let class = classify_spectrum(&spec, &polys);
    let rates = rate.map(|r| spec.rates(r));
    match a.format {
        Format::Csv => {
            let mut cols = vec!["k", "theta_re", "theta_im"];
            if rates.is_some() {
                cols.extend(["rate_re", "rate_im"]);
            }
            let rows = spec.thetas().iter().enumerate().map(|(k, th)| {
                let mut row = vec![k.to_string(), num(th.re), num(th.im)];
                if let Some(r) = rates.as_ref().and_then(|r| r.get(k)) {
                    row.extend([num(r.re), num(r.im)]);
                }
                row
            });
            Ok(ok(report::csv(&cols, rows)))
        }
        Format::Json => {
            let body = json!({
                "thetas": complex_vec(spec.thetas()),
                "method": to_value(&spec.method),
                "all_real": spec.all_real,
                "all_nonneg_real": spec.all_nonneg_real,
                "classification": to_value(&class),
                "uniform_rate": rate,
                "rates": rates.as_deref().map(complex_vec),
                "residuals": {
                    "recurrence": polys.recurrence_residual(&p, &spec),
                    "cayley_hamilton": polys.cayley_hamilton_residual(&p),
                    "row_sum": polys.row_sum_residual(),
                },
            });
            Ok(ok(pretty(&with_header("spectrum", &loaded.labels, body))))
        }
    }
}

fn dual(a: &ReportArgs) -> Result<Output, CliError> {
    let loaded = load(&a.file)?;
    let (p, rate) = kernel(&loaded)?;
    let sys = DualSystem::build(&p, &loaded.m0)?;
    let plain = check_intertwining(sys.link.matrix(), p.matrix(), sys.dual.matrix(), &INTERTWINING_POWERS);
    let mut pass = plain.pass;
    let modified = if p.class().target_absorbing {
        let md = build_modified_dual(&sys.link, &sys.spectrum, &loaded.m0)?;
        let rep = check_intertwining(md.lambda_bar.matrix(), p.matrix(), &md.p_bar, &INTERTWINING_POWERS);
        let initial_residual = md.initial_residual(&loaded.m0);
        pass &= rep.pass && initial_residual <= 1e-12;
        Some(json!({
            "lambda_bar": complex_matrix(md.lambda_bar.matrix()),
            "p_bar": complex_matrix(&md.p_bar),
            "m_bar0": md.m_bar0,
            "d_bar": md.d_bar,
            "absorbing": md.absorbing,
            "stochastic": md.stochastic,
            "intertwining": to_value(&rep),
            "initial_residual": initial_residual,
        }))
    } else {
        None
    };
    let sst_weights = if p.class().ergodic {
        let pi = stationary_law(&p)?;
        Some(sst_mixture_weights(&sys.link, pi[p.d()]))
    } else {
        None
    };
    let weights = sst_weights.as_ref().unwrap_or(&sys.weights);
    match a.format {
        Format::Csv => {
            let rows = weights.components().iter().enumerate().map(|(k, w)| vec![k.to_string(), num(w.re), num(w.im)]);
            Ok(Output { text: report::csv(&["k", "a_re", "a_im"], rows), gates_pass: pass })
        }
        Format::Json => {
            let body = json!({
                "thetas": complex_vec(sys.spectrum.thetas()),
                "uniform_rate": rate,
                "link": complex_matrix(sys.link.matrix()),
                "link_stochastic": sys.link.stochastic,
                "link_min_entry": sys.link.min_entry,
                "link_row_sum_residual": sys.link.row_sum_residual(),
                "dual": complex_matrix(sys.dual.matrix()),
                "weights": complex_vec(weights.components()),
                "weights_kind": if sst_weights.is_some() { "strong-stationary" } else { "absorption" },
                "intertwining": to_value(&plain),
                "modified": modified,
                "gates_pass": pass,
            });
            Ok(Output { text: pretty(&with_header("dual", &loaded.labels, body)), gates_pass: pass })
        }
    }
}

/// Default reporting horizon for a law.
fn t_max_for(law: &AbsorptionLaw, a: &ReportArgs) -> Result<f64, CliError> {
    match a.t_max {
        Some(t) if t >= 0.0 => Ok(t),
        Some(t) => Err(CliError::Input(format!("--t-max must be nonnegative, got {t}"))),
        None => Ok(law.quantile(QUANTILE_DEFAULT)?.ceil()),
    }
}

/// Report times: every integer up to `t_max`, or an even grid in continuous time.
fn grid(law: &AbsorptionLaw, a: &ReportArgs) -> Result<Vec<f64>, CliError> {
    let t_max = t_max_for(law, a)?;
    Ok(match law.domain() {
        dist::TimeDomain::Discrete => (0..=t_max as usize).map(|t| t as f64).collect(),
        dist::TimeDomain::Continuous { .. } => {
            let k = a.points.max(2) - 1;
            (0..=k).map(|i| t_max * i as f64 / k as f64).collect()
        }
    })
}

fn time_cell(t: f64, law: &AbsorptionLaw) -> String {
    match law.domain() {
        dist::TimeDomain::Discrete => format!("{}", t as u64),
        dist::TimeDomain::Continuous { .. } => num(t),
    }
}

fn default_tol(loaded: &LoadedChain) -> f64 {
    match loaded.chain {
        Chain::Discrete(_) => 1e-10,
        Chain::Continuous(_) => 1e-8,
    }
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn absorption(a: &ReportArgs) -> Result<Output, CliError> {
    let loaded = load(&a.file)?;
    let (law, d_bar, oracle_mean) = match &loaded.chain {
        Chain::Discrete(p) => {
            let law = dist::absorption_law(p, &loaded.m0)?;
            let sys = DualSystem::build(p, &loaded.m0)?;
            let md = build_modified_dual(&sys.link, &sys.spectrum, &loaded.m0)?;
            let oracle_mean = if a.oracle { Some(mean_absorption_oracle(p, &loaded.m0)?) } else { None };
            (law, md.d_bar, oracle_mean)
        }
        Chain::Continuous(g) => {
            let law = dist::hypoexp_law(g, &loaded.m0)?;
            let (p, _) = chain::uniformize(g, UniformRate::Auto)?;
            let sys = DualSystem::build(&p, &loaded.m0)?;
            let md = build_modified_dual(&sys.link, &sys.spectrum, &loaded.m0)?;
            (law, md.d_bar, None)
        }
    };
    let times = grid(&law, a)?;
    let exact = law.cdf_grid(&times)?;
    let oracle = if a.oracle {
        Some(match &loaded.chain {
            Chain::Discrete(p) => power_cdf_oracle(p, &loaded.m0, times.len() - 1)?,
            Chain::Continuous(g) => ctmc_cdf_oracle(g, &loaded.m0, &times)?,
        })
    } else {
        None
    };
    let tol = a.tol.unwrap_or_else(|| default_tol(&loaded));
    let deviation = oracle.as_ref().map(|o| max_deviation(&exact, o));
    let pass = deviation.is_none_or(|d| d <= tol);
    let text = match a.format {
        Format::Csv => {
            let mut cols = vec!["t", "exact_cdf"];
            if oracle.is_some() {
                cols.push("oracle_cdf");
            }
            let rows = times.iter().enumerate().map(|(i, &t)| {
                let mut row = vec![time_cell(t, &law), num(exact[i])];
                if let Some(o) = &oracle {
                    row.push(num(o[i]));
                }
                row
            });
            report::csv(&cols, rows)
        }
        Format::Json => {
            let body = json!({
                "law": to_value(&law.summary()),
                "weights": complex_vec(law.weights()),
                "d_bar": d_bar,
                "mean": law.mean().ok(),
                "oracle_mean": oracle_mean,
                "t_max": times.last(),
                "series": { "t": times, "exact_cdf": exact, "oracle_cdf": oracle },
                "max_deviation": deviation,
                "tol": tol,
                "gates_pass": pass,
            });
            pretty(&with_header("absorption", &loaded.labels, body))
        }
    };
    Ok(Output { text, gates_pass: pass })
}

fn sst(a: &ReportArgs) -> Result<Output, CliError> {
    let loaded = load(&a.file)?;
    let (law, monotone, pi) = match &loaded.chain {
        Chain::Discrete(p) => (dist::sst_law(p, &loaded.m0)?, check_monotone_reversal(p)?, stationary_law(p)?),
        Chain::Continuous(g) => {
            let (p, _) = chain::uniformize(g, UniformRate::Auto)?;
            (dist::sst_law_continuous(g, &loaded.m0)?, check_monotone_reversal(&p)?, stationary_law(&p)?)
        }
    };
    let times = grid(&law, a)?;
    let exact = law.cdf_grid(&times)?;
    let sep = match &loaded.chain {
        Chain::Discrete(p) => separation(p, &loaded.m0, times.len() - 1)?.s,
        Chain::Continuous(g) => separation_continuous(g, &loaded.m0, &times)?,
    };
    let one_minus_s: Vec<f64> = sep.iter().map(|s| 1.0 - s).collect();
    let deviation = max_deviation(&exact, &one_minus_s);
    let tol = a.tol.unwrap_or_else(|| default_tol(&loaded));
    let pass = deviation <= tol;
    let text = match a.format {
        Format::Csv => {
            let rows = times.iter().enumerate().map(|(i, &t)| vec![time_cell(t, &law), num(exact[i]), num(sep[i])]);
            report::csv(&["t", "exact_cdf", "separation"], rows)
        }
        Format::Json => {
            let body = json!({
                "law": to_value(&law.summary()),
                "weights": complex_vec(law.weights()),
                "stationary": pi,
                "monotone_reversal": to_value(&monotone),
                "mean": law.mean().ok(),
                "t_max": times.last(),
                "series": { "t": times, "exact_cdf": exact, "separation": sep },
                "max_deviation": deviation,
                "tol": tol,
                "gates_pass": pass,
            });
            pretty(&with_header("sst", &loaded.labels, body))
        }
    };
    Ok(Output { text, gates_pass: pass })
}

fn setup(loaded: &LoadedChain, mode: Option<Mode>) -> Result<CouplingSetup, CliError> {
    let mode = mode.unwrap_or(match &loaded.chain {
        Chain::Continuous(_) => Mode::Continuous,
        Chain::Discrete(p) if p.class().skip_free_up && loaded.m0.is_delta(0) => Mode::Skipfree,
        Chain::Discrete(_) => Mode::General,
    });
    match (&loaded.chain, mode) {
        (Chain::Discrete(p), Mode::Skipfree) => {
            if !loaded.m0.is_delta(0) {
                return Err(CliError::Input(
                    "skipfree mode starts at state 0; drop `initial` or use --mode general".into(),
                ));
            }
            Ok(CouplingSetup::skip_free(p)?)
        }
        (Chain::Discrete(p), Mode::General) => Ok(CouplingSetup::general(p, &loaded.m0)?),
        (Chain::Continuous(g), Mode::Continuous) => {
            if !loaded.m0.is_delta(0) {
                return Err(CliError::Input("continuous mode starts at state 0".into()));
            }
            Ok(CouplingSetup::continuous(g)?)
        }
        (Chain::Discrete(_), Mode::Continuous) => {
            Err(CliError::Input("continuous mode needs a continuous-time chain file".into()))
        }
        (Chain::Continuous(_), _) => {
            Err(CliError::Input("continuous-time chains only support --mode continuous".into()))
        }
    }
}

fn config(a: &MonteCarloArgs) -> Result<SimulationConfig, CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Input(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    Ok(SimulationConfig { samples: a.samples, seed: a.seed, horizon: a.horizon, alpha: a.alpha, jobs: a.jobs })
}

fn mode_name(mode: CouplingMode) -> Value {
    to_value(&mode)
}

fn trace_json(i: usize, tr: &CouplingTrace, paths: bool) -> Value {
    let mut v = json!({
        "index": i,
        "t_primal": tr.t_primal,
        "t_dual": tr.t_dual,
        "l": tr.l,
        "horizon_hit": tr.horizon_hit,
    });
    if paths {
        let o = v.as_object_mut().expect("object");
        o.insert("primal_path".into(), to_value(&tr.primal_path));
        o.insert("dual_path".into(), to_value(&tr.dual_path));
        if !tr.times.is_empty() {
            o.insert("times".into(), to_value(&tr.times));
        }
    }
    v
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn simulate(a: &MonteCarloArgs) -> Result<Output, CliError> {
    let loaded = load(&a.file)?;
    let setup = setup(&loaded, a.mode)?;
    let cfg = config(a)?;
    let traces = coupling::simulate(&setup, &cfg)?;
    let text = match a.format {
        Format::Csv => {
            let rows = traces.iter().enumerate().map(|(i, tr)| {
                vec![
                    i.to_string(),
                    opt_num(tr.t_primal),
                    opt_num(tr.t_dual),
                    tr.l.to_string(),
                    tr.horizon_hit.to_string(),
                ]
            });
            report::csv(&["trace", "t_primal", "t_dual", "l", "horizon_hit"], rows)
        }
        Format::Json => {
            let hits = traces.iter().filter(|t| t.horizon_hit).count();
            let body = json!({
                "mode": mode_name(setup.mode),
                "config": to_value(&cfg),
                "horizon_hits": hits,
                "traces": traces.iter().enumerate().map(|(i, t)| trace_json(i, t, a.paths)).collect::<Vec<_>>(),
            });
            pretty(&with_header("simulate", &loaded.labels, body))
        }
    };
    Ok(ok(text))
}

fn verify(a: &MonteCarloArgs) -> Result<Output, CliError> {
    let loaded = load(&a.file)?;
    let setup = setup(&loaded, a.mode)?;
    let cfg = config(a)?;
    let traces = coupling::simulate(&setup, &cfg)?;
    let rep = coupling::verify(&setup, &setup.law, &traces, &cfg)?;
    let text = match a.format {
        Format::Csv => {
            let mut samples: Vec<f64> = traces.iter().filter(|t| !t.horizon_hit).filter_map(|t| t.t_primal).collect();
            samples.sort_by(f64::total_cmp);
            let law = &setup.law;
            let times = grid(
                law,
                &ReportArgs {
                    file: String::new(),
                    oracle: false,
                    t_max: None,
                    points: 50,
                    tol: None,
                    format: Format::Csv,
                },
            )?;
            let exact = law.cdf_grid(&times)?;
            let n = samples.len().max(1) as f64;
            let rows = times.iter().enumerate().map(|(i, &t)| {
                let below = samples.partition_point(|&s| s <= t) as f64;
                vec![time_cell(t, law), num(exact[i]), num(below / n)]
            });
            report::csv(&["t", "exact_cdf", "empirical_cdf"], rows)
        }
        Format::Json => {
            let body = json!({ "report": to_value(&rep), "pass": rep.pass });
            pretty(&with_header("verify", &loaded.labels, body))
        }
    };
    Ok(Output { text, gates_pass: rep.pass })
}
