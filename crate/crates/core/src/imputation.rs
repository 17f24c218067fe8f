//! Nearest-neighbour imputation over a masked Euclidean distance, and the
//! masking simulation that picks the neighbour count.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Cohort, VariableSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

const MASK_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputerConfig {
    pub k_grid: Vec<usize>,
    pub mask_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for ImputerConfig {
    fn default() -> Self {
        ImputerConfig { k_grid: (1..=20).collect(), mask_fraction: 0.10, repeats: 30, seed: 0 }
    }
}

impl ImputerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_grid.is_empty() || self.k_grid.contains(&0) {
            return Err(Error::Config("k_grid must be non-empty with k >= 1".into()));
        }
        if !(self.mask_fraction > 0.0 && self.mask_fraction < 1.0) {
            return Err(Error::Config("mask_fraction must lie in (0, 1)".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElbowRule {
    Elbow,
    ArgminMae,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowPoint {
    pub k: usize,
    pub mean_mae: f64,
    pub sd_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub points: Vec<ElbowPoint>,
    pub chosen_k: usize,
    pub chosen_rule: ElbowRule,
}

/// Euclidean distance over coordinates observed in both rows, rescaled by
/// `total / observed`. `None` when the rows share no observed coordinate.
pub fn masked_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut sum = 0.0;
    let mut present = 0usize;
    for (x, y) in a.iter().zip(b) {
        if !x.is_nan() && !y.is_nan() {
            sum += (x - y) * (x - y);
            present += 1;
        }
    }
    (present > 0).then(|| (sum * a.len() as f64 / present as f64).sqrt())
}

/// Donor rows ordered by distance to `row`, ties to the lower index. Donors
/// sharing no observed coordinate sort last.
fn neighbour_order(row: &[f64], donors: &Matrix, skip: Option<usize>) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..donors.n_rows())
        .filter(|&r| Some(r) != skip)
        .map(|r| (masked_distance(row, donors.row(r)).unwrap_or(f64::INFINITY), r))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    d.into_iter().map(|(_, r)| r).collect()
}

fn check_imputable(target: &Matrix, donors: &Matrix) -> Result<()> {
    for j in 0..donors.n_cols() {
        if (0..donors.n_rows()).all(|i| donors.is_missing(i, j)) {
            return Err(Error::UnimputableColumn(j));
        }
    }
    for i in 0..target.n_rows() {
        if target.n_cols() > 0 && target.row(i).iter().all(|v| v.is_nan()) {
            return Err(Error::UnimputableRow(i));
        }
    }
    Ok(())
}

fn impute_rows(target: &Matrix, donors: &Matrix, k: usize, same: bool) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if target.n_cols() != donors.n_cols() {
        return Err(Error::FeatureMismatch { expected: donors.n_cols(), got: target.n_cols() });
    }
    check_imputable(target, donors)?;
    let filled: Vec<Vec<f64>> = (0..target.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = target.row(i);
            let mut out = row.to_vec();
            if !row.iter().any(|v| v.is_nan()) {
                return out;
            }
            let order = neighbour_order(row, donors, same.then_some(i));
            for (j, cell) in out.iter_mut().enumerate() {
                if !cell.is_nan() {
                    continue;
                }
                let vals: Vec<f64> = order
                    .iter()
                    .map(|&r| donors.get(r, j))
                    .filter(|v| !v.is_nan())
                    .take(k)
                    .collect();
                // left missing here when no other row observes the column; caught below
                if !vals.is_empty() {
                    *cell = vals.iter().sum::<f64>() / vals.len() as f64;
                }
            }
            out
        })
        .collect();
    let m = Matrix::from_rows(&filled)?;
    if let Some(j) = (0..m.n_cols()).find(|&j| (0..m.n_rows()).any(|i| m.is_missing(i, j))) {
        return Err(Error::UnimputableColumn(j));
    }
    Ok(m)
}

/// Fills every missing cell with the mean of that column over the `k`
/// nearest other rows observing it. Observed cells are returned untouched.
pub fn knn_impute(matrix: &Matrix, k: usize) -> Result<Matrix> {
    impute_rows(matrix, matrix, k, true)
}

/// Same as [`knn_impute`] but neighbours are drawn only from `donors`.
pub fn knn_impute_from(target: &Matrix, donors: &Matrix, k: usize) -> Result<Matrix> {
    impute_rows(target, donors, k, false)
}

/// Picks the grid point with the largest positive second difference of the
/// mean curve. A tied maximum or a curve without positive curvature falls
/// back to the smallest k attaining the minimum mean.
pub fn choose_elbow(points: &[ElbowPoint]) -> (usize, ElbowRule) {
    let argmin = points
        .iter()
        .fold(None::<&ElbowPoint>, |best, p| match best {
            Some(b) if b.mean_mae <= p.mean_mae => Some(b),
            _ => Some(p),
        })
        .map(|p| p.k)
        .unwrap_or(1);
    if points.len() < 3 {
        return (argmin, ElbowRule::ArgminMae);
    }
    let d2: Vec<f64> = points
        .windows(3)
        .map(|w| w[0].mean_mae - 2.0 * w[1].mean_mae + w[2].mean_mae)
        .collect();
    let best = d2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = points.iter().map(|p| p.mean_mae.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let winners: Vec<usize> = (0..d2.len()).filter(|&i| (d2[i] - best).abs() <= tol).collect();
    if best > tol && winners.len() == 1 {
        (points[winners[0] + 1].k, ElbowRule::Elbow)
    } else {
        (argmin, ElbowRule::ArgminMae)
    }
}

fn draw_mask(n: usize, p: usize, count: usize, seed: u64, repeat: usize) -> Result<Vec<bool>> {
    for attempt in 0..MASK_RETRIES {
        let mut r = rng::stream(seed, &[0xE1B0, repeat as u64, attempt as u64]);
        let mut mask = vec![false; n * p];
        for c in sample(&mut r, n * p, count) {
            mask[c] = true;
        }
        let cols_ok = (0..p).all(|j| (0..n).any(|i| !mask[i * p + j]));
        let rows_ok = (0..n).all(|i| (0..p).any(|j| !mask[i * p + j]));
        if cols_ok && rows_ok {
            return Ok(mask);
        }
    }
    Err(Error::MaskingFailure)
}

/// Per-k mean absolute error for one masking repeat.
fn repeat_errors(train: &Matrix, grid: &[usize], frac: f64, seed: u64, repeat: usize) -> Result<Vec<f64>> {
    let (n, p) = (train.n_rows(), train.n_cols());
    let count = ((n * p) as f64 * frac).round() as usize;
    if count == 0 {
        return Err(Error::MaskingFailure);
    }
    let mask = draw_mask(n, p, count, seed, repeat)?;
    let mut masked = train.clone();
    for (c, &m) in mask.iter().enumerate() {
        if m {
            masked.set(c / p, c % p, f64::NAN);
        }
    }
    let k_max = *grid.iter().max().expect("non-empty grid");
    let per_row: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut err = vec![0.0; grid.len()];
            let cols: Vec<usize> = (0..p).filter(|&j| mask[i * p + j]).collect();
            if cols.is_empty() {
                return err;
            }
            let order = neighbour_order(masked.row(i), &masked, Some(i));
            for j in cols {
                let truth = train.get(i, j);
                let mut prefix = Vec::with_capacity(k_max + 1);
                prefix.push(0.0);
                for v in order.iter().map(|&r| masked.get(r, j)).filter(|v| !v.is_nan()).take(k_max) {
                    prefix.push(prefix.last().unwrap() + v);
                }
                let avail = prefix.len() - 1;
                for (g, &k) in grid.iter().enumerate() {
                    let used = k.min(avail);
                    err[g] += (prefix[used] / used as f64 - truth).abs();
                }
            }
            err
        })
        .collect();
    let mut total = vec![0.0; grid.len()];
    for e in per_row {
        for (t, v) in total.iter_mut().zip(e) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|t| t / count as f64).collect())
}

/// Masks a fraction of a complete matrix per repeat, imputes with every k
/// in the grid, and averages the absolute error over repeats.
pub fn elbow_select_k(train: &Matrix, config: &ImputerConfig) -> Result<ElbowCurve> {
    config.validate()?;
    if train.has_missing() {
        return Err(Error::InvalidMeasure("elbow simulation needs a complete matrix".into()));
    }
    if train.n_rows() < 2 || train.n_cols() == 0 {
        return Err(Error::MaskingFailure);
    }
    let mut grid = config.k_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let runs: Vec<Vec<f64>> = (0..config.repeats)
        .map(|r| repeat_errors(train, &grid, config.mask_fraction, config.seed, r))
        .collect::<Result<_>>()?;
    let points: Vec<ElbowPoint> = grid
        .iter()
        .enumerate()
        .map(|(g, &k)| {
            let v: Vec<f64> = runs.iter().map(|r| r[g]).collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let sd = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            ElbowPoint { k, mean_mae: mean, sd_mae: sd }
        })
        .collect();
    let (chosen_k, chosen_rule) = choose_elbow(&points);
    Ok(ElbowCurve { points, chosen_k, chosen_rule })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnCodec {
    /// Cell holds the position of its code in the level list.
    Levels(VariableSpec),
    /// Min-max scaled from `[lo, hi]` to `[0, 1]`.
    Scaled { lo: f64, hi: f64 },
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub names: Vec<String>,
    pub codecs: Vec<ColumnCodec>,
}

/// Encodes the named columns of the selected rows as numbers. Categorical
/// columns become level indices; continuous columns with a declared range
/// are min-max scaled over that range.
pub fn encode_for_imputation(cohort: &Cohort, names: &[String], rows: &[usize]) -> Result<(Matrix, Encoding)> {
    let mut cols = Vec::with_capacity(names.len());
    let mut codecs = Vec::with_capacity(names.len());
    for name in names {
        let col = cohort.column(name)?;
        let spec = &col.spec;
        let codec = if spec.kind.is_categorical() {
            ColumnCodec::Levels(spec.clone())
        } else if let Some([lo, hi]) = spec.range {
            if hi <= lo {
                return Err(Error::DegenerateRange(lo));
            }
            ColumnCodec::Scaled { lo, hi }
        } else {
            ColumnCodec::Identity
        };
        let mut values = Vec::with_capacity(rows.len());
        for &r in rows {
            let v = match (col.cells[r], &codec) {
                (Cell::Missing, _) => f64::NAN,
                (Cell::Category(code), ColumnCodec::Levels(s)) => s
                    .level_index(code)
                    .ok_or_else(|| Error::CodebookViolation { column: name.clone(), value: code.to_string() })?
                    as f64,
                (Cell::Numeric(x), ColumnCodec::Scaled { lo, hi }) => (x - lo) / (hi - lo),
                (Cell::Numeric(x), ColumnCodec::Identity) => x,
                (other, _) => {
                    return Err(Error::WrongKind(format!("{name}: unexpected cell {other:?}")));
                }
            };
            values.push(v);
        }
        cols.push(values);
        codecs.push(codec);
    }
    let m = if rows.is_empty() { Matrix::zeros(0, names.len()) } else { Matrix::from_columns(&cols)? };
    Ok((m, Encoding { names: names.to_vec(), codecs }))
}

impl Encoding {
    pub fn decode_value(&self, column: usize, v: f64) -> Cell {
        if v.is_nan() {
            return Cell::Missing;
        }
        match &self.codecs[column] {
            ColumnCodec::Levels(spec) => {
                let idx = v.round().clamp(0.0, (spec.levels.len() - 1) as f64) as usize;
                Cell::Category(spec.levels[idx].code)
            }
            ColumnCodec::Scaled { lo, hi } => Cell::Numeric(lo + v * (hi - lo)),
            ColumnCodec::Identity => Cell::Numeric(v),
        }
    }

    /// Decodes a matrix back into one cell vector per column.
    pub fn decode(&self, m: &Matrix) -> Vec<Vec<Cell>> {
        (0..m.n_cols())
            .map(|j| (0..m.n_rows()).map(|i| self.decode_value(j, m.get(i, j))).collect())
            .collect()
    }

    /// Fills the missing cells of `cohort` at positions `rows` from the
    /// decoded matrix; observed cells are left untouched.
    pub fn write_back(&self, cohort: &mut Cohort, rows: &[usize], m: &Matrix) -> Result<()> {
        for (j, name) in self.names.iter().enumerate() {
            let col = cohort.column(name)?;
            let spec = col.spec.clone();
            let mut cells = col.cells.clone();
            for (i, &r) in rows.iter().enumerate() {
                if cells[r].is_missing() {
                    cells[r] = self.decode_value(j, m.get(i, j));
                }
            }
            cohort.push_column(spec, cells)?;
        }
        Ok(())
    }
}
