//! Typed columnar cohort storage.
//!
//! A [`Cohort`] is an ordered list of named columns, each carrying its
//! [`VariableSpec`]. Cells are [`Cell::Numeric`], [`Cell::Category`] or
//! [`Cell::Missing`]; missingness is never encoded inside the value domain.

mod codebook;
mod csv_io;
mod scale;
mod split;

pub use codebook::{Codebook, Kind, Level, Role, VariableSpec};
pub use csv_io::{read_cohort, read_cohort_from, write_cohort, write_cohort_to};
pub use scale::minmax_scale;
pub use split::{stratified_kfold, stratified_split, SplitPlan};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Numeric(f64),
    Category(i64),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Numeric(v) => Some(v),
            Cell::Category(c) => Some(c as f64),
            Cell::Missing => None,
        }
    }

    pub fn code(&self) -> Option<i64> {
        match *self {
            Cell::Category(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub spec: VariableSpec,
    pub cells: Vec<Cell>,
}

impl Column {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn numeric(&self) -> Vec<Option<f64>> {
        self.cells.iter().map(Cell::as_f64).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    /// Position of each cell's code within the level list; continuous cells yield `None`.
    pub fn level_indices(&self) -> Vec<Option<usize>> {
        self.cells
            .iter()
            .map(|c| c.code().and_then(|code| self.spec.level_index(code)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cohort {
    rows: usize,
    columns: Vec<Column>,
}

impl Cohort {
    pub fn new(rows: usize) -> Self {
        Cohort { rows, columns: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(Column::name).collect()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.spec.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.spec.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Append a column after validating its length and codes. Replaces an
    /// existing column of the same name in place, keeping column order.
    pub fn push_column(&mut self, spec: VariableSpec, cells: Vec<Cell>) -> Result<()> {
        if self.columns.is_empty() && self.rows == 0 {
            self.rows = cells.len();
        }
        if cells.len() != self.rows {
            return Err(Error::LengthMismatch { column: spec.name.clone(), got: cells.len(), expected: self.rows });
        }
        spec.validate()?;
        for cell in &cells {
            spec.check_cell(cell)?;
        }
        let col = Column { spec, cells };
        match self.columns.iter_mut().find(|c| c.spec.name == col.spec.name) {
            Some(slot) => *slot = col,
            None => self.columns.push(col),
        }
        Ok(())
    }

    pub fn drop_column(&mut self, name: &str) {
        self.columns.retain(|c| c.spec.name != name);
    }

    pub fn codebook(&self) -> Codebook {
        Codebook { variables: self.columns.iter().map(|c| c.spec.clone()).collect() }
    }

    /// New cohort holding `rows` (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Cohort {
        Cohort {
            rows: rows.len(),
            columns: self
                .columns
                .iter()
                .map(|c| Column { spec: c.spec.clone(), cells: rows.iter().map(|&r| c.cells[r]).collect() })
                .collect(),
        }
    }

    /// Rows for which `keep` returns true.
    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Cohort {
        let rows: Vec<usize> = (0..self.rows).filter(|&r| keep(r)).collect();
        self.select_rows(&rows)
    }

    /// 0/1 outcome vector (level index) for a binary column without missing cells.
    pub fn binary_outcome(&self, name: &str) -> Result<Vec<u8>> {
        let col = self.column(name).map_err(|_| Error::InvalidOutcome(name.to_string()))?;
        if col.spec.kind != Kind::Binary || col.spec.levels.len() != 2 {
            return Err(Error::InvalidOutcome(name.to_string()));
        }
        col.level_indices()
            .into_iter()
            .map(|i| i.map(|i| i as u8).ok_or_else(|| Error::InvalidOutcome(name.to_string())))
            .collect()
    }
}
