//! Fixed-format output: CSV tables with 9 significant digits and JSON
//! sidecars with the resolved config and fit summaries. Formatting is
//! locale-free and key order is sorted, so reruns of the same config and
//! seed produce byte-identical files.

use crate::config::RunConfig;
use crate::experiments::ExperimentResult;
use coupler_core::fitting::FitError;
use serde::Serialize;
use serde_json::{json, Value};
use std::io;
use std::path::Path;

/// 9 significant digits: enough to round-trip the stored f64 through text
/// and back to the same printed value.
pub fn format_float(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn render_csv(columns: &[(String, Vec<f64>)]) -> Result<String, String> {
    if columns.is_empty() {
        return Err("csv needs at least one column".into());
    }
    let n = columns[0].1.len();
    for (name, values) in columns {
        if values.len() != n {
            return Err(format!(
                "column {name} has {} rows, expected {n}",
                values.len()
            ));
        }
    }
    let mut out = String::new();
    let header: Vec<&str> = columns.iter().map(|(name, _)| name.as_str()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in 0..n {
        let cells: Vec<String> = columns
            .iter()
            .map(|(_, values)| format_float(values[row]))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, columns: &[(String, Vec<f64>)]) -> io::Result<()> {
    let text = render_csv(columns).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    std::fs::write(path, text)
}

/// Flatten a gridded result into columns: one column per axis (values
/// repeated row-major) followed by the four basis probabilities.
pub fn experiment_table(result: &ExperimentResult) -> Vec<(String, Vec<f64>)> {
    let n = result.len();
    let lens: Vec<usize> = result.axes.iter().map(|a| a.values.len()).collect();
    let mut columns: Vec<(String, Vec<f64>)> = Vec::with_capacity(result.axes.len() + 4);
    let mut stride = n;
    for (axis, &len) in result.axes.iter().zip(&lens) {
        stride /= len.max(1);
        let mut col = Vec::with_capacity(n);
        for k in 0..n {
            col.push(axis.values[(k / stride) % len]);
        }
        columns.push((axis.column(), col));
    }
    columns.push(("p00".into(), result.p00.clone()));
    columns.push(("p01".into(), result.p01.clone()));
    columns.push(("p10".into(), result.p10.clone()));
    columns.push(("p11".into(), result.p11.clone()));
    columns
}

/// Sidecar skeleton: which command ran, under exactly which resolved config
/// (plus its hash, for cross-referencing outputs), and the fit results.
pub fn sidecar(command: &str, config: &RunConfig, seed: u64, results: Value) -> Value {
    let config_value = serde_json::to_value(config).unwrap_or(Value::Null);
    json!({
        "command": command,
        "config": config_value,
        "config_sha256": config.fingerprint(),
        "seed": seed,
        "results": results,
    })
}

pub fn write_sidecar(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Fits appear in sidecars as either the fitted parameters or the error
/// string, never as a hard failure of the whole run.
pub fn fit_json<T: Serialize>(fit: &Result<T, FitError>) -> Value {
    match fit {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Axis;

    #[test]
    fn csv_uses_nine_significant_digits() {
        assert_eq!(format_float(1.0), "1.00000000e0");
        assert_eq!(format_float(-0.123456789012), "-1.23456789e-1");
        let printed: f64 = format_float(0.1).parse().unwrap();
        assert_eq!(format_float(printed), format_float(0.1));
    }

    #[test]
    fn csv_rows_follow_header() {
        let cols = vec![
            ("x_MHz".to_string(), vec![0.0, 1.0]),
            ("p00".to_string(), vec![1.0, 0.5]),
        ];
        let text = render_csv(&cols).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x_MHz,p00"));
        assert_eq!(lines.next(), Some("0.00000000e0,1.00000000e0"));
        assert_eq!(lines.next(), Some("1.00000000e0,5.00000000e-1"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn ragged_columns_are_rejected() {
        let cols = vec![
            ("a".to_string(), vec![0.0, 1.0]),
            ("b".to_string(), vec![0.0]),
        ];
        assert!(render_csv(&cols).is_err());
    }

    #[test]
    fn table_expands_axes_row_major() {
        let result = ExperimentResult {
            axes: vec![
                Axis {
                    name: "a",
                    unit: "MHz",
                    values: vec![10.0, 20.0],
                },
                Axis {
                    name: "b",
                    unit: "ns",
                    values: vec![1.0, 2.0, 3.0],
                },
            ],
            p00: vec![1.0; 6],
            p01: vec![0.0; 6],
            p10: vec![0.0; 6],
            p11: vec![0.0; 6],
            p_xi: vec![0.0; 6],
            p_ix: vec![0.0; 6],
            fingerprint: String::new(),
            seed: 1,
        };
        let cols = experiment_table(&result);
        assert_eq!(cols[0].0, "a_MHz");
        assert_eq!(cols[0].1, vec![10.0, 10.0, 10.0, 20.0, 20.0, 20.0]);
        assert_eq!(cols[1].0, "b_ns");
        assert_eq!(cols[1].1, vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        assert_eq!(cols[2].0, "p00");
    }

    #[test]
    fn sidecar_keys_are_sorted_and_stable() {
        let cfg = RunConfig::default();
        let v = sidecar("coupler-curve", &cfg, 1, json!({"rows": 41}));
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.starts_with("{\"command\""));
        assert!(v["config_sha256"].as_str().unwrap().len() == 64);
        assert_eq!(serde_json::to_string(&v).unwrap(), text);
    }
}
