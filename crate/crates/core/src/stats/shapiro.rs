//! Shapiro-Wilk W test using Royston's (1995) polynomial approximations
//! for the coefficients and the null distribution of W.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::dist::{normal_cdf, normal_quantile};
use crate::error::{Error, Result};
use crate::rng;

pub const MAX_N: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
    pub n: usize,
}

fn poly(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

/// Half-vector of antisymmetric weights `a_1..a_{n/2}`.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an = n as f64;
    let m: Vec<f64> = (1..=half).map(|i| normal_quantile((i as f64 - 0.375) / (an + 0.25))).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first_rest, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        (2, ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt())
    } else {
        (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
    };
    for i in first_rest..half {
        a[i] = -m[i] / fac;
    }
    a
}

pub fn shapiro_wilk(values: &[f64]) -> Result<ShapiroWilk> {
    let n = values.len();
    if !(3..=MAX_N).contains(&n) {
        return Err(Error::InvalidMeasure(format!("Shapiro-Wilk needs 3..={MAX_N} values, got {n}")));
    }
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let range = x[n - 1] - x[0];
    if !(range > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let a = coefficients(n);
    let mean = x.iter().sum::<f64>() / n as f64;
    let ssq = x.iter().map(|v| ((v - mean) / range).powi(2)).sum::<f64>();
    let num = a.iter().enumerate().map(|(i, ai)| ai * (x[n - 1 - i] - x[i]) / range).sum::<f64>();
    let w = (num * num / ssq).min(1.0);

    let p_value = if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::PI / 3.0;
        (pi6 * (w.sqrt().asin() - stqr)).max(0.0)
    } else {
        let an = n as f64;
        let mut w1 = (1.0 - w).ln();
        let (m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if w1 >= gamma {
                return Ok(ShapiroWilk { w, p_value: 1e-99, n });
            }
            w1 = -(gamma - w1).ln();
            (poly(&C3, an), poly(&C4, an).exp())
        } else {
            let ln_n = an.ln();
            (poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        1.0 - normal_cdf((w1 - m) / s)
    };
    Ok(ShapiroWilk { w, p_value, n })
}

/// Tests a seeded random subsample of [`MAX_N`] values when the input is larger.
pub fn shapiro_wilk_subsampled(values: &[f64], seed: u64) -> Result<ShapiroWilk> {
    if values.len() <= MAX_N {
        return shapiro_wilk(values);
    }
    let mut r = rng::stream(seed, &[0x5_4A91]);
    let picked: Vec<f64> = sample(&mut r, values.len(), MAX_N).into_iter().map(|i| values[i]).collect();
    shapiro_wilk(&picked)
}
