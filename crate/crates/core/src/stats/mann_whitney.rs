use serde::{Deserialize, Serialize};

use super::dist::normal_two_sided;
use crate::error::{Error, Result};

/// Pooled sizes up to this use the exact permutation distribution.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U of the first sample: pairs with `x > y` plus half the ties.
    pub u: f64,
    pub p_value: f64,
    pub method: TestMethod,
}

/// Midranks (1-based) of the pooled sample, doubled so they are integers.
fn doubled_midranks(pooled: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].partial_cmp(&pooled[b]).expect("finite values"));
    let mut ranks = vec![0u64; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1; doubled average = i + j + 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Mann-Whitney U test. The p-value is `P(|U - E U| >= |u - E U|)`
/// under the permutation null (exact for pooled n <= 20), otherwise the
/// tie-corrected normal approximation with continuity correction.
pub fn mann_whitney(x: &[f64], y: &[f64]) -> Result<MannWhitney> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidMeasure("Mann-Whitney needs two non-empty samples".into()));
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMeasure("non-finite value".into()));
    }
    let n = n1 + n2;
    let ranks = doubled_midranks(&pooled);
    let r1_doubled: u64 = ranks[..n1].iter().sum();
    // 2U = 2R1 - n1(n1+1)
    let u2 = r1_doubled as i64 - (n1 * (n1 + 1)) as i64;
    let u = u2 as f64 / 2.0;
    // 2 E[U] = n1 n2
    let mean2 = (n1 * n2) as i64;

    if n <= EXACT_MAX_N {
        // ways[k][s]: subsets of size k with doubled rank sum s.
        let max_sum: usize = ranks.iter().sum::<u64>() as usize;
        let mut ways = vec![vec![0f64; max_sum + 1]; n1 + 1];
        ways[0][0] = 1.0;
        for &r in &ranks {
            let r = r as usize;
            for k in (1..=n1).rev() {
                for s in (r..=max_sum).rev() {
                    let add = ways[k - 1][s - r];
                    if add != 0.0 {
                        ways[k][s] += add;
                    }
                }
            }
        }
        let offset = (n1 * (n1 + 1)) as i64;
        let observed = (u2 - mean2).abs();
        let (mut hit, mut total) = (0.0, 0.0);
        for (s, &w) in ways[n1].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            total += w;
            if ((s as i64 - offset) - mean2).abs() >= observed {
                hit += w;
            }
        }
        return Ok(MannWhitney { u, p_value: (hit / total).min(1.0), method: TestMethod::Exact });
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let mut sorted = pooled.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if !(var > 0.0) {
        return Ok(MannWhitney { u, p_value: 1.0, method: TestMethod::Asymptotic });
    }
    let diff = u - n1f * n2f / 2.0;
    let corrected = (diff.abs() - 0.5).max(0.0);
    let z = corrected / var.sqrt();
    Ok(MannWhitney { u, p_value: normal_two_sided(z).min(1.0), method: TestMethod::Asymptotic })
}
