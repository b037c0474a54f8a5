//! Report rendering and atomic file output.
//!
//! Reals are rendered with 7 significant digits everywhere (JSON and CSV),
//! integers untouched. Files are written to a temporary sibling and renamed
//! into place, so a report path never holds partial output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

/// Round to 7 significant digits.
pub fn round_real(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.6e}").parse().unwrap_or(x)
}

/// Render one real with 7 significant digits, shortest form.
pub fn format_real(x: f64) -> String {
    round_real(x).to_string()
}

fn quantize_value(value: &mut Value) {
    match value {
        Value::Number(num) => {
            if !num.is_i64() && !num.is_u64() {
                if let Some(f) = num.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_real(f)) {
                        *num = rounded;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(quantize_value),
        Value::Object(map) => map.values_mut().for_each(quantize_value),
        _ => {}
    }
}

/// Serialize to pretty JSON with reals at 7 significant digits.
pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut tree = serde_json::to_value(value)?;
    quantize_value(&mut tree);
    let mut text = serde_json::to_string_pretty(&tree)?;
    text.push('\n');
    Ok(text)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.exists() {
        return Err(Error::argument(format!(
            "parent directory {} does not exist",
            parent.display()
        )));
    }
    let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Atomically write a JSON report.
pub fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_atomic(path, render_json(value)?.as_bytes())
}

/// Atomically write a CSV with a header row (always present, even with no
/// records) and RFC-style quoting.
pub fn write_records_csv<S: AsRef<[u8]>>(
    path: &Path,
    header: &[&str],
    rows: &[Vec<S>],
) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut wtr = csv::WriterBuilder::new().from_writer(&mut buf);
        wtr.write_record(header)?;
        for row in rows {
            wtr.write_record(row.iter().map(|c| c.as_ref()))?;
        }
        wtr.flush()?;
    }
    write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reals_are_rounded_to_seven_significant_digits() {
        assert_eq!(round_real(0.76825823305593), 0.7682582);
        assert_eq!(round_real(123456789.0_f64), 123456800.0);
        assert_eq!(round_real(-1.2345678e-9), -1.234568e-9);
        assert_eq!(round_real(0.0), 0.0);
        assert_eq!(format_real(0.76825823305593), "0.7682582");
    }

    #[test]
    fn integers_survive_quantization() {
        let mut v = json!({"n": 100, "seed": 18446744073709551615u64, "x": 0.123456789});
        quantize_value(&mut v);
        assert_eq!(v["n"], json!(100));
        assert_eq!(v["seed"], json!(18446744073709551615u64));
        assert_eq!(v["x"], json!(0.1234568));
    }

    #[test]
    fn json_write_and_parse_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let value = json!({"value": 0.76825823305593, "n": 100});
        write_json_file(&value, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["value"], json!(0.7682582));
        assert_eq!(back["n"], json!(100));
    }

    #[test]
    fn empty_csv_still_has_a_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.csv");
        write_records_csv::<String>(&path, &["a", "b"], &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
    }

    #[test]
    fn missing_parent_directory_is_an_error() {
        let err = write_json_file(&json!(1), Path::new("/nonexistent-dir-xyz/file.json"));
        assert!(err.is_err());
    }

    proptest::proptest! {
        #[test]
        fn rounding_is_idempotent_and_close(x in -1e12f64..1e12) {
            let once = round_real(x);
            proptest::prop_assert_eq!(round_real(once).to_bits(), once.to_bits());
            if x != 0.0 {
                proptest::prop_assert!(((once - x) / x).abs() <= 5e-7);
            }
        }
    }

    #[test]
    fn csv_quotes_fields_with_separators() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        write_records_csv(&path, &["a"], &[vec!["x,y".to_string()]]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a\n\"x,y\"\n");
    }
}
