//! Artifact files: numeric tables (CSV or JSON) and JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Format;
use crate::CliError;

/// Named numeric columns, one row per sample. Units are part of the
/// column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    #[cfg(test)]
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    #[cfg(test)]
    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (n, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Input(format!("row {}: {e}", n + 2)))?;
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }
}

pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
}

impl Output {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            format,
        })
    }

    pub fn table(&self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &table.to_csv()?),
            Format::Json => self.json(stem, table),
        }
    }

    /// Writes CSV produced by a core writer, or `value` as JSON.
    pub fn native<T: Serialize>(
        &self,
        stem: &str,
        value: &T,
        csv: impl FnOnce(&mut Vec<u8>) -> ringqed::Result<()>,
    ) -> Result<PathBuf, CliError> {
        match self.format {
            Format::Csv => {
                let mut buf = Vec::new();
                csv(&mut buf)?;
                self.write(&format!("{stem}.csv"), &String::from_utf8(buf).expect("utf-8 csv"))
            }
            Format::Json => self.json(stem, value),
        }
    }

    /// Reports are always JSON.
    pub fn json<T: Serialize>(&self, stem: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(&format!("{stem}.json"), &serde_json::to_string_pretty(value)?)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv_round_trip_is_exact() {
        let mut t = Table::new(&["a_nm", "b"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![-2.5e-9, 7.0]);
        let back = Table::from_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("b").unwrap(), vec![1.0 / 3.0, 7.0]);
    }
}
