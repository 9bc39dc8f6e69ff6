//! In-memory CSV tables with a fixed header.

use crate::error::{LabError, Result};

#[derive(Clone, Debug, Default)]
pub(crate) struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self::from_header(header.iter().map(|s| s.to_string()).collect())
    }

    pub fn from_header(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let bad = |e: csv::Error| LabError::Format(e.to_string());
        w.write_record(&self.header).map_err(bad)?;
        for row in &self.rows {
            w.write_record(row).map_err(bad)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| LabError::Format(e.to_string()))
    }
}

/// A parsed CSV file: header plus string records.
#[derive(Clone, Debug)]
pub(crate) struct ReadTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReadTable {
    pub fn read(path: &std::path::Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| LabError::Format(format!("{}: {e}", path.display())))?;
        let header = r.headers().map_err(|e| LabError::Format(e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| LabError::Format(format!("{}: {e}", path.display())))?;
            rows.push(rec.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| LabError::Format(format!("missing column {name}")))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column(name)?;
        self.rows
            .iter()
            .map(|r| r[k].parse::<f64>().map_err(|e| LabError::Format(format!("column {name}: {e}"))))
            .collect()
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>> {
        let k = self.column(name)?;
        Ok(self.rows.iter().map(|r| r[k].clone()).collect())
    }
}
