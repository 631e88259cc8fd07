//! CSV ingestion and output, and the fixed-format JSON writer.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::Value;

use crate::error::{io_err, CliError, CliResult};
use tpbn::model::RegressionDataset;

/// Response in the first column, predictors in the rest.
pub fn read_dataset(path: &Path, header: bool) -> CliResult<RegressionDataset> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1 + header as usize;
        let record = record.map_err(|e| CliError::Usage(format!("{}: malformed CSV: {e}", path.display())))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    CliError::Usage(format!(
                        "{}: line {line}, column {}: '{field}' is not a finite number{}",
                        path.display(),
                        c + 1,
                        if i == 0 && !header { " (use --header if the file has a header row)" } else { "" }
                    ))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::Usage(format!(
                    "{}: line {line} has {} fields, expected {}",
                    path.display(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Usage(format!("{}: no data rows", path.display())));
    }
    let cols = rows[0].len();
    if cols < 2 {
        return Err(CliError::Usage(format!(
            "{}: need a response column and at least one predictor, found {cols} column(s)",
            path.display()
        )));
    }
    let y = DVector::from_fn(n, |i, _| rows[i][0]);
    let x = DMatrix::from_fn(n, cols - 1, |i, j| rows[i][j + 1]);
    Ok(RegressionDataset::new(y, x)?)
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Rows of floats with a header line.
pub fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> CliResult<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_dataset(path: &Path, data: &RegressionDataset) -> CliResult<()> {
    let mut header = vec!["y".to_string()];
    header.extend((1..=data.p()).map(|j| format!("x{j}")));
    let rows = (0..data.n()).map(|i| {
        let mut r = Vec::with_capacity(data.p() + 1);
        r.push(data.y[i]);
        r.extend(data.x.row(i).iter().cloned());
        r
    });
    write_csv(path, &header, rows)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))
}

/// Pretty JSON with sorted keys and floats printed as `{:.16e}`.
pub fn json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            let scalar = items.iter().all(|i| !i.is_array() && !i.is_object());
            if scalar {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (k, item) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    write_value(item, indent + 1, out);
                    if k + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (k, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*key], indent + 1, out);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let text = json_string(&serde_json::json!({ "v": v }));
            let back: Value = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back["v"].as_f64().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn keys_sorted_and_nan_null() {
        let v = serde_json::json!({ "b": f64::NAN, "a": [1.5, 2], "c": { "z": true, "y": "s" } });
        let text = json_string(&v);
        assert_eq!(
            text,
            "{\n  \"a\": [1.5000000000000000e0, 2],\n  \"b\": null,\n  \"c\": {\n    \"y\": \"s\",\n    \"z\": true\n  }\n}\n"
        );
    }
}
