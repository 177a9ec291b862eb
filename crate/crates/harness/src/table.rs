//! In-memory CSV tables with deterministic number formatting.

use crate::error::{HarnessError, Result};

/// A rectangular table whose cells are already formatted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Orchestration(format!("missing column `{name}`")))
    }

    /// Parsed numeric values of a column.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[c].parse::<f64>()
                    .map_err(|_| HarnessError::Orchestration(format!("non-numeric cell `{}` in `{name}`", r[c])))
            })
            .collect()
    }

    pub fn strings(&self, name: &str) -> Result<Vec<&str>> {
        let c = self.column(name)?;
        Ok(self.rows.iter().map(|r| r[c].as_str()).collect())
    }

    /// Rows whose column `name` equals `value`.
    pub fn filter(&self, name: &str, value: &str) -> Result<Table> {
        let c = self.column(name)?;
        Ok(Table {
            header: self.header.clone(),
            rows: self.rows.iter().filter(|r| r[c] == value).cloned().collect(),
        })
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| HarnessError::Orchestration(e.to_string()))
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Table> {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    /// Whether every numeric-looking cell is finite.
    pub fn all_finite(&self) -> bool {
        self.rows.iter().flatten().all(|cell| match cell.parse::<f64>() {
            Ok(v) => v.is_finite(),
            Err(_) => true,
        })
    }
}
