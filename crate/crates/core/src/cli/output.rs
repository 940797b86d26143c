//! Deterministic JSON and CSV writers.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::numeric::round_significant;

/// Significant digits kept in every emitted number.
pub const DIGITS: usize = 12;

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().unwrap_or(0.0), DIGITS);
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

/// Writes `text` to `out`, or to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

pub fn number(x: f64) -> String {
    format!("{}", round_significant(x, DIGITS))
}

/// Comma-separated file with LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_numbers_are_rounded() {
        let text = to_json(&serde_json::json!({"x": 1.0 / 3.0, "n": 3, "v": [0.1 + 0.2]})).unwrap();
        assert!(text.contains("0.333333333333"));
        assert!(!text.contains("0.3333333333333"));
        assert!(text.contains("0.3\n") || text.contains("0.3\r\n") || text.contains("0.3 "), "{text}");
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn csv_uses_lf() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a", "b"], vec![vec!["1".into(), number(0.5)]]).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "a,b\n1,0.5\n");
    }
}
