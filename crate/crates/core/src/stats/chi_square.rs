use serde::{Deserialize, Serialize};

use super::dist::chi2_sf;
use super::mann_whitney::TestMethod;
use crate::error::{Error, Result};

/// Tables with two rows or two columns and at most this many observations use the exact
/// conditional (fixed-margin) distribution of the statistic.
pub const EXACT_MAX_N: u64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub method: TestMethod,
}

/// Drop empty rows and columns; fail when fewer than two of either remain.
fn compact(table: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(Error::DegenerateTable);
    }
    let keep_cols: Vec<usize> = (0..cols).filter(|&j| table.iter().any(|r| r[j] > 0)).collect();
    let out: Vec<Vec<u64>> = table
        .iter()
        .filter(|r| r.iter().any(|&v| v > 0))
        .map(|r| keep_cols.iter().map(|&j| r[j]).collect())
        .collect();
    if out.len() < 2 || keep_cols.len() < 2 {
        return Err(Error::DegenerateTable);
    }
    Ok(out)
}

/// Pearson statistic without continuity correction.
pub fn pearson_statistic(table: &[Vec<u64>]) -> f64 {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let n: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                stat += (o as f64 - e).powi(2) / e;
            }
        }
    }
    stat
}

fn ln_choose(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

/// Sum of hypergeometric probabilities of every 2 x c table sharing the
/// observed margins whose statistic is at least the observed one.
fn exact_two_row(table: &[Vec<u64>], observed: f64) -> f64 {
    let cols: Vec<u64> = (0..table[0].len()).map(|j| table[0][j] + table[1][j]).collect();
    let r0: u64 = table[0].iter().sum();
    let n: u64 = cols.iter().sum();
    let ln_total = ln_choose(n, r0);
    let tol = 1e-9 * observed.abs().max(1.0);
    let mut first = vec![0u64; cols.len()];
    let mut p = 0.0;

    fn walk(
        j: usize,
        left: u64,
        cols: &[u64],
        first: &mut Vec<u64>,
        ln_w: f64,
        ctx: (f64, f64, f64),
        p: &mut f64,
    ) {
        let (ln_total, observed, tol) = ctx;
        if j == cols.len() {
            if left == 0 {
                let t = [first.clone(), cols.iter().zip(first.iter()).map(|(c, a)| c - a).collect()];
                if pearson_statistic(&t) >= observed - tol {
                    *p += (ln_w - ln_total).exp();
                }
            }
            return;
        }
        let rest: u64 = cols[j + 1..].iter().sum();
        let lo = left.saturating_sub(rest);
        for a in lo..=cols[j].min(left) {
            first[j] = a;
            walk(j + 1, left - a, cols, first, ln_w + ln_choose(cols[j], a), ctx, p);
        }
    }
    walk(0, r0, &cols, &mut first, 0.0, (ln_total, observed, tol), &mut p);
    p.min(1.0)
}

/// Chi-square test of independence on an r x c count table.
pub fn chi_square_test(table: &[Vec<u64>]) -> Result<ChiSquare> {
    let t = compact(table)?;
    let stat = pearson_statistic(&t);
    let df = (t.len() - 1) * (t[0].len() - 1);
    let n: u64 = t.iter().flatten().sum();
    if n <= EXACT_MAX_N && (t.len() == 2 || t[0].len() == 2) {
        let two_row = if t.len() == 2 { t } else { vec![t.iter().map(|r| r[0]).collect(), t.iter().map(|r| r[1]).collect()] };
        return Ok(ChiSquare { statistic: stat, df, p_value: exact_two_row(&two_row, stat), method: TestMethod::Exact });
    }
    Ok(ChiSquare { statistic: stat, df, p_value: chi2_sf(stat, df as f64), method: TestMethod::Asymptotic })
}
