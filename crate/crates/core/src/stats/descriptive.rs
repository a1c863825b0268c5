use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Coefficient of variation: sample std / mean.
pub fn cov(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("cov needs at least 2 values".into()));
    }
    let m = mean(values);
    if m == 0.0 {
        return Err(Error::Degenerate("cov of zero-mean values".into()));
    }
    Ok(sample_std(values) / m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided t-test of slope = 0 with n − 2 degrees of freedom.
    pub p_two_sided: f64,
}

pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("x has {}, y has {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument("ols needs at least 3 points".into()));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("constant x in ols".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let df = (n - 2) as f64;
    // Residual noise relative to the signal decides the exact-fit cases.
    let p_two_sided = if syy == 0.0 {
        1.0
    } else if sse <= 1e-24 * syy {
        0.0
    } else {
        let se = (sse / df / sxx).sqrt();
        super::special::t_two_sided(slope / se, df)
    };
    Ok(OlsFit { slope, intercept, p_two_sided })
}
