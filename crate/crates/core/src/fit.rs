//! Ordinary least-squares line fits, used for every power-law exponent
//! estimate in the crate.

use serde::Serialize;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile used for confidence half-widths.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub n: usize,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits `y = intercept + slope·x`.
pub fn line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::Config("fit: length mismatch".into()));
    }
    if n < 2 {
        return Err(Error::insufficient("line_fit", format!("{n} points")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::insufficient("line_fit", "degenerate abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_se, intercept_se) = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        let s2 = rss / (nf - 2.0);
        let sse = (s2 / sxx).sqrt();
        (sse, (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
        n,
    })
}

/// Fits `log|v| = log A + p·log t`, skipping non-positive or non-finite data.
pub fn power_law(ts: &[f64], vs: &[f64]) -> Result<LineFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(vs)
        .filter(|(t, v)| **t > 0.0 && v.abs() > 0.0 && v.is_finite())
        .map(|(t, v)| (t.ln(), v.abs().ln()))
        .unzip();
    line(&lx, &ly)
}
