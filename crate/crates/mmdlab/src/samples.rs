//! Sample matrices: n observations of a d-dimensional random vector.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An n×d matrix of observations, stored row-major. Row i is the i-th
/// observation. Always has n ≥ 1 rows and only finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl SampleMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::argument("sample matrix needs at least one row"));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::argument("sample rows must have at least one column"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::argument(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(rows.len(), dim, data)
    }

    pub fn from_flat(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::argument("sample matrix must be non-empty"));
        }
        if data.len() != n * dim {
            return Err(Error::argument(format!(
                "flat data length {} does not match {n}x{dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::argument("sample matrix entries must be finite"));
        }
        Ok(Self { data, n, dim })
    }

    /// 1-D convenience constructor: one column, one row per value.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.len(), 1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major flat view; the ℝ^{nd} vector the complexity measures act on.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Stack `other` below `self`. Column counts must agree.
    pub fn vstack(&self, other: &SampleMatrix) -> Result<SampleMatrix> {
        if self.dim != other.dim {
            return Err(Error::argument(format!(
                "cannot stack {} columns onto {}",
                other.dim, self.dim
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SampleMatrix::from_flat(self.n + other.n, self.dim, data)
    }

    /// Read a headerless CSV, one observation per line.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row: std::result::Result<Vec<f64>, _> =
                record.iter().map(|s| s.parse::<f64>()).collect();
            let row = row.map_err(|e| {
                Error::argument(format!("csv line {}: {e}", i + 1))
            })?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for row in self.rows() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_ragged_input() {
        assert!(SampleMatrix::from_rows(vec![]).is_err());
        assert!(SampleMatrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(SampleMatrix::from_rows(vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = SampleMatrix::from_rows(vec![vec![0.5, -1.25], vec![3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = SampleMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn csv_parse_error_names_the_line() {
        let err = SampleMatrix::read_csv("1.0\nnot-a-number\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn vstack_concatenates_rows() {
        let a = SampleMatrix::from_column(&[1.0, 2.0]).unwrap();
        let b = SampleMatrix::from_column(&[3.0]).unwrap();
        let c = a.vstack(&b).unwrap();
        assert_eq!(c.n(), 3);
        assert_eq!(c.row(2), &[3.0]);
    }
}
