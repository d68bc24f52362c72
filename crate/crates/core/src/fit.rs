//! Ordinary least squares for straight lines, used for every log-log slope.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateFit(format!("{} points", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite data".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(Error::DegenerateFit("abscissae do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        rms_residual: (ssr / n).sqrt(),
    })
}

/// Slope of `log(err)` against `log(h)`.
pub fn loglog_slope(h: &[f64], err: &[f64]) -> Result<LineFit> {
    if h.iter().chain(err).any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateFit("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    least_squares_line(&lx, &ly)
}
