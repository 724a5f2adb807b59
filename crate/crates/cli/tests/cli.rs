use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use proptest::prelude::*;
use serde_json::Value;
use ssd_cli::spec_file::{ChainSpecFile, TimeMode};

fn chain(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../chains").join(name)
}

fn ssd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssd")).args(args).output().unwrap()
}

fn ssd_on(args: &[&str], file: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssd")).args(args).arg(chain(file)).output().unwrap()
}

fn ssd_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ssd"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn close(v: &Value, x: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - x).abs() <= tol
}

#[test]
fn validate_describes_birth_death_chain() {
    let out = ssd_on(&["validate"], "bd3.json");
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("birth–death"));
}

#[test]
fn spectrum_of_bd3() {
    let v = json(&ssd_on(&["spectrum"], "bd3.json"));
    let th = v["thetas"].as_array().unwrap();
    let r = 2f64.sqrt() / 4.0;
    assert!(close(&th[0], 0.5 - r, 1e-12));
    assert!(close(&th[1], 0.5 + r, 1e-12));
    assert!(close(&th[2], 1.0, 1e-12));
    assert_eq!(v["command"], "spectrum");
    assert_eq!(v["tool"], "ssd");
}

#[test]
fn dual_of_gen3_reports_weights() {
    let v = json(&ssd_on(&["dual"], "gen3.json"));
    let w = v["weights"].as_array().unwrap();
    for (got, want) in w.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0]) {
        assert!(close(got, want, 1e-12));
    }
    assert_eq!(v["gates_pass"], true);
}

#[test]
fn absorption_matches_oracle() {
    let v = json(&ssd_on(&["absorption", "--oracle"], "bd3.json"));
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-10);
    assert!(close(&v["mean"], 8.0, 1e-12));
    let series = &v["series"];
    assert!(close(&series["exact_cdf"][2], 0.125, 1e-14));
}

#[test]
fn absorption_csv_has_header_and_rows() {
    let out = ssd_on(&["absorption", "--format", "csv", "--t-max", "4"], "bd3.json");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,exact_cdf");
    assert_eq!(lines.len(), 6);
    let f2: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
    assert!((f2 - 0.125).abs() <= 1e-14);
}

#[test]
fn continuous_absorption_uses_labels() {
    let v = json(&ssd_on(&["absorption", "--oracle"], "rates21.json"));
    assert_eq!(v["labels"], serde_json::json!(["start", "middle", "done"]));
    assert!(close(&v["mean"], 1.5, 1e-10));
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn sst_matches_separation() {
    let v = json(&ssd_on(&["sst", "--oracle", "--t-max", "3"], "erg3.json"));
    let cdf: Vec<f64> = v["series"]["exact_cdf"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (got, want) in cdf.iter().zip([0.0, 0.0, 0.5, 0.75]) {
        assert!((got - want).abs() <= 1e-14);
    }
}

#[test]
fn simulate_csv_columns() {
    let out = ssd_on(&["simulate", "--samples", "5", "--format", "csv"], "bd3.json");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("trace,t_primal,t_dual,l,horizon_hit\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn verify_passes_on_bd3() {
    let v = json(&ssd_on(&["verify", "--samples", "20000", "--seed", "3"], "bd3.json"));
    assert_eq!(v["pass"], true);
}

#[test]
fn seed_comes_from_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_ssd"))
            .args(["simulate", "--samples", "50", "--format", "csv"])
            .arg(chain("bd3.json"))
            .env("SSD_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));
}

#[test]
fn stdin_is_accepted() {
    let text = std::fs::read_to_string(chain("bd3.json")).unwrap();
    let v = json(&ssd_stdin(&["spectrum", "-"], &text));
    assert_eq!(v["thetas"].as_array().unwrap().len(), 3);
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(ssd_stdin(&["validate", "-"], "not json").status.code(), Some(2));
    let bad_row = r#"{"mode":"discrete","matrix":[[0.5,0.4],[0,1]]}"#;
    assert_eq!(ssd_stdin(&["validate", "-"], bad_row).status.code(), Some(2));
    let unreachable = r#"{"mode":"discrete","matrix":[[1,0],[0,1]],"target":1}"#;
    assert_eq!(ssd_stdin(&["validate", "-"], unreachable).status.code(), Some(2));
    assert_eq!(ssd(&["validate", "/nonexistent/chain.json"]).status.code(), Some(2));
    assert_eq!(ssd(&["bogus"]).status.code(), Some(2));
}

#[test]
fn mode_mismatch_exits_2() {
    assert_eq!(ssd_on(&["verify", "--mode", "continuous", "--samples", "10"], "bd3.json").status.code(), Some(2));
    assert_eq!(ssd_on(&["verify", "--mode", "skipfree", "--samples", "10"], "rates21.json").status.code(), Some(2));
}

#[test]
fn zero_superdiagonal_exits_3() {
    let out = ssd_on(&["absorption", "--format", "json"], "gap.json");
    assert!(out.status.success(), "general path handles the gap chain");
    assert_eq!(ssd_on(&["simulate", "--mode", "skipfree", "--samples", "10"], "gap.json").status.code(), Some(3));
}

#[test]
fn too_few_samples_exit_3() {
    assert_eq!(ssd_on(&["verify", "--samples", "10"], "bd3.json").status.code(), Some(3));
}

#[test]
fn non_monotone_sst_exits_4() {
    let chain = r#"{"mode":"discrete","matrix":[[0.1,0.9,0],[0.45,0.1,0.45],[0,0.9,0.1]]}"#;
    assert_eq!(ssd_stdin(&["sst", "-"], chain).status.code(), Some(4));
}

#[test]
fn failed_oracle_gate_exits_5() {
    let out = ssd_on(&["absorption", "--oracle", "--tol", "0"], "bd3.json");
    assert_eq!(out.status.code(), Some(5));
    assert!(!out.stdout.is_empty());
}

fn spec_strategy() -> impl Strategy<Value = ChainSpecFile> {
    (2usize..6).prop_flat_map(|n| {
        (
            prop::bool::ANY,
            prop::collection::vec(prop::collection::vec(-1e6f64..1e6, n), n),
            prop::option::of(prop::collection::vec(0f64..1.0, n)),
            prop::option::of(0..n),
            prop::option::of(prop::collection::vec("[a-z]{1,6}", n)),
        )
            .prop_map(|(cont, matrix, initial, target, labels)| ChainSpecFile {
                mode: if cont { TimeMode::Continuous } else { TimeMode::Discrete },
                matrix,
                initial,
                target,
                labels,
            })
    })
}

proptest! {
    #[test]
    fn chain_file_round_trips(spec in spec_strategy()) {
        prop_assert_eq!(ChainSpecFile::parse(&spec.emit()).unwrap(), spec);
    }
}
