//! Column tables and their CSV encoding.

use std::path::Path;

use crate::error::{config_err, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Real(Vec<f64>),
    Int(Vec<i64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Real(v) => v.len(),
            Column::Int(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Real(v) => format_real(v[row]),
            Column::Int(v) => v[row].to_string(),
        }
    }
}

/// 17 significant digits in scientific notation; parses back to the same bits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Named columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Column>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn real(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.names.push(name.into());
        self.columns.push(Column::Real(values));
        self
    }

    pub fn int(mut self, name: impl Into<String>, values: Vec<i64>) -> Self {
        self.names.push(name.into());
        self.columns.push(Column::Int(values));
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }

    fn check(&self) -> Result<()> {
        let n = self.rows();
        if let Some((name, c)) = self.names.iter().zip(&self.columns).find(|(_, c)| c.len() != n) {
            return Err(config_err("table", format!("column `{name}` has {} rows, expected {n}", c.len())));
        }
        Ok(())
    }
}

/// Header row then one line per row, LF terminated.
pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    table.check()?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(&table.names)?;
    let mut record = Vec::with_capacity(table.columns.len());
    for row in 0..table.rows() {
        record.clear();
        record.extend(table.columns.iter().map(|c| c.cell(row)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
