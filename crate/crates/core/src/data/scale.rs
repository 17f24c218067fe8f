use crate::error::{Error, Result};

/// Map observed values to `(v - lo) / (hi - lo)`; missing values pass through.
pub fn minmax_scale(values: &[Option<f64>], lo: f64, hi: f64) -> Result<Vec<Option<f64>>> {
    if hi == lo {
        return Err(Error::DegenerateRange(lo));
    }
    if hi < lo {
        return Err(Error::Config(format!("minmax range [{lo}, {hi}] is reversed")));
    }
    let span = hi - lo;
    Ok(values.iter().map(|v| v.map(|v| (v - lo) / span)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ladder_endpoints_and_midpoint() {
        let out = minmax_scale(&[Some(1.0), Some(10.0), Some(5.5), None], 1.0, 10.0).unwrap();
        assert_eq!(out, vec![Some(0.0), Some(1.0), Some(0.5), None]);
    }

    #[test]
    fn degenerate_range() {
        assert_eq!(minmax_scale(&[Some(1.0)], 3.0, 3.0), Err(Error::DegenerateRange(3.0)));
    }

    proptest! {
        #[test]
        fn stays_in_unit_interval(lo in -100.0f64..100.0, width in 0.001f64..100.0, t in 0.0f64..=1.0) {
            let hi = lo + width;
            let v = (lo + t * width).min(hi);
            let out = minmax_scale(&[Some(v)], lo, hi).unwrap()[0].unwrap();
            prop_assert!((0.0..=1.0).contains(&out));
        }
    }
}
