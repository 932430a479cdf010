//! Least-squares power-law fitting shared by the experiment reports.

use crate::error::{Error, Result};

/// Fits log(value) = slope * log(h) + intercept and returns
/// (slope, residual) where residual is the RMS misfit in log space.
pub fn fit_exponent(series: &[(f64, f64)]) -> Result<(f64, f64)> {
    if series.len() < 3 {
        return Err(Error::Parameter(format!(
            "exponent fit needs at least 3 points, got {}",
            series.len()
        )));
    }
    for &(h, v) in series {
        if h <= 0.0 || v <= 0.0 {
            return Err(Error::Parameter(format!(
                "exponent fit requires positive data, got ({h}, {v})"
            )));
        }
    }
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|&(h, _)| h.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|&(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx < 1e-300 {
        return Err(Error::Parameter("exponent fit abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let d = y - (slope * x + intercept);
            d * d
        })
        .sum();
    Ok((slope, (rss / n).sqrt()))
}
