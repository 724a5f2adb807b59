//! Output helpers shared by the subcommands.

use serde::Serialize;
use serde_json::{json, Value};
use ssd_core::nalgebra::DMatrix;
use ssd_core::num_complex::Complex64;
use ssd_core::spectral::ORDERING;
use ssd_core::tol::Tolerances;

/// Fields present in every JSON report.
pub fn header(command: &str, labels: &[String]) -> Value {
    json!({
        "tool": "ssd",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": ssd_core::VERSION,
        "command": command,
        "eigenvalue_ordering": ORDERING,
        "tolerances": Tolerances::default(),
        "labels": labels,
    })
}

/// Merges `body` into the report header.
pub fn with_header(command: &str, labels: &[String], body: Value) -> Value {
    let mut out = header(command, labels);
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    out
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report data serializes")
}

/// Real numbers where every imaginary part vanishes, `[re, im]` pairs otherwise.
pub fn complex_vec(v: &[Complex64]) -> Value {
    if v.iter().all(|z| z.im == 0.0) {
        to_value(&v.iter().map(|z| z.re).collect::<Vec<_>>())
    } else {
        to_value(&v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
    }
}

pub fn complex_matrix(m: &DMatrix<Complex64>) -> Value {
    let rows: Vec<Vec<Complex64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    if m.iter().all(|z| z.im == 0.0) {
        to_value(&rows.iter().map(|r| r.iter().map(|z| z.re).collect::<Vec<_>>()).collect::<Vec<_>>())
    } else {
        Value::Array(rows.iter().map(|r| complex_vec_pairs(r)).collect())
    }
}

fn complex_vec_pairs(v: &[Complex64]) -> Value {
    to_value(&v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

pub fn real_matrix(m: &DMatrix<f64>) -> Value {
    to_value(&m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// A CSV number with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// CSV text from a header and rows of preformatted cells.
pub fn csv(columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 0.30000000000000004] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn complex_values_fall_back_to_pairs() {
        let v = [Complex64::new(0.5, 0.0), Complex64::new(0.1, 0.2)];
        assert_eq!(complex_vec(&v), json!([[0.5, 0.0], [0.1, 0.2]]));
        assert_eq!(complex_vec(&v[..1]), json!([0.5]));
    }
}
