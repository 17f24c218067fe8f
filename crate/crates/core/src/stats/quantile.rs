/// Median of a sorted slice.
fn median_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        (x[n / 2 - 1] + x[n / 2]) / 2.0
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(median_sorted(&x))
}

/// (Q1, median, Q3) with the inclusive-median convention: for odd n the
/// median belongs to both halves.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = x.len();
    if n == 1 {
        return Some((x[0], x[0], x[0]));
    }
    let half = n.div_ceil(2);
    let lower = &x[..half];
    let upper = &x[n - half..];
    Some((median_sorted(lower), median_sorted(&x), median_sorted(upper)))
}
