use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal, StudentsT};
use statrs::function::erf::erfc;

/// Two-sided normal tail `2 * (1 - Phi(|z|))`, accurate far into the tail.
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn chi2_sf(stat: f64, df: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}

pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    StudentsT::new(0.0, 1.0, df).map(|d| 2.0 * d.sf(t.abs())).unwrap_or(f64::NAN)
}

pub fn f_sf(f: f64, df1: f64, df2: f64) -> f64 {
    if !(f > 0.0) {
        return 1.0;
    }
    if !f.is_finite() {
        return 0.0;
    }
    FisherSnedecor::new(df1, df2).map(|d| d.sf(f)).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((normal_two_sided(1.959963984540054) - 0.05).abs() < 1e-10);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((chi2_sf(3.841458820694124, 1.0) - 0.05).abs() < 1e-10);
        assert!((t_two_sided(2.2281388519649385, 10.0) - 0.05).abs() < 1e-9);
        assert!((f_sf(4.9646027437307145, 1.0, 10.0) - 0.05).abs() < 1e-9);
        assert!(normal_two_sided(20.0) > 0.0);
    }
}
