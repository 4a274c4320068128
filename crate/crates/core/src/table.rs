//! Tabular containers for captured sessions.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// A captured session as text cells, header first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Self { columns, rows }
    }

    /// Reads a session CSV. A trailing record without its newline is an
    /// in-progress append and is ignored.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_bytes(&bytes)
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let complete = match bytes.iter().rposition(|&b| b == b'\n') {
            Some(i) => &bytes[..=i],
            None => &[][..],
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(complete);
        let mut records = reader.records();
        let columns = match records.next() {
            Some(r) => r?.iter().map(str::to_string).collect(),
            None => return Ok(Self::default()),
        };
        let rows = records
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        Ok(Self { columns, rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner()
            .map_err(|e| Error::Structure(format!("csv buffer: {e}")))
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }
}

/// Number of complete data rows in a session CSV (header excluded).
pub fn count_complete_rows(path: &Path) -> Result<u64> {
    if !path.exists() {
        return Ok(0);
    }
    Ok(RawTable::read_csv(path)?.rows.len() as u64)
}

/// Numeric, column-major table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NumericTable {
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
    nrows: usize,
}

impl NumericTable {
    /// Builds a table from named columns; all columns must share a length.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let nrows = columns.first().map_or(0, |(_, v)| v.len());
        Self::with_rows(columns, nrows)
    }

    /// Like [`NumericTable::from_columns`], but keeps `nrows` for a zero-column table.
    pub fn with_rows(columns: Vec<(String, Vec<f64>)>, nrows: usize) -> Result<Self> {
        if let Some((name, v)) = columns.iter().find(|(_, v)| v.len() != nrows) {
            return Err(Error::Shape(format!(
                "column `{name}` has {} rows, expected {nrows}",
                v.len()
            )));
        }
        let (names, data) = columns.into_iter().unzip();
        Ok(Self {
            columns: names,
            data,
            nrows,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.position(name).map(|i| self.data[i].as_slice())
    }

    pub fn column_at(&self, i: usize) -> &[f64] {
        &self.data[i]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data[col][row]
    }

    /// Renders every value back to text (shortest round-trip formatting).
    pub fn to_raw(&self) -> RawTable {
        let rows = (0..self.nrows)
            .map(|r| self.data.iter().map(|c| c[r].to_string()).collect())
            .collect();
        RawTable::new(self.columns.clone(), rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_trailing_record_is_ignored() {
        let t = RawTable::from_csv_bytes(b"a,b\n1,2\n3,4\n5,").unwrap();
        assert_eq!(t.columns, vec!["a", "b"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(RawTable::from_csv_bytes(b"").unwrap(), RawTable::default());
    }

    #[test]
    fn csv_bytes_round_trip() {
        let t = RawTable::new(
            vec!["x".into(), "name".into()],
            vec![vec!["1".into(), "a,b".into()], vec!["".into(), "c".into()]],
        );
        let bytes = t.to_csv_bytes().unwrap();
        assert_eq!(RawTable::from_csv_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn ragged_columns_are_rejected() {
        let err = NumericTable::from_columns(vec![
            ("a".into(), vec![1.0, 2.0]),
            ("b".into(), vec![1.0]),
        ]);
        assert!(matches!(err, Err(Error::Shape(_))));
    }
}
