//! The free generalized eigenfunction
//!
//!   u(x, y) = c ∫ ξ(ζ) ∫ e^{iθ} dη dζ,  θ = y·ζ − η³/6 + (x + λ − ζ²/2)η,
//!   c = (2π)^{−(d+1)/2},
//!
//! evaluated through the Airy reduction of the η-integral, and its two-term
//! stationary-phase asymptote.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, LineFit};
use crate::parabolic::theta1_calculus;
use crate::quadrature::{adaptive, AdaptiveOptions};
use crate::special::airy_ai;

/// Interval cap for each adaptive ζ-quadrature.
const MAX_INTERVALS: usize = 20_000;

/// ∫ e^{i(−η³/6 + (x + λ − ζ²/2)η)} dη = 2^{1/3}·2π·Ai(−2^{1/3}(x + λ − ζ²/2)).
pub fn airy_reduction(x: f64, zeta: &[f64], lambda: f64) -> Complex64 {
    let arg = x + lambda - 0.5 * zeta.iter().map(|z| z * z).sum::<f64>();
    let k = 2f64.cbrt();
    Complex64::new(k * 2.0 * PI * airy_ai(-k * arg), 0.0)
}

/// Amplitude profile ξ on R^{d−1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum XiProfile {
    /// exp(−1/(1 − |ζ−ζ₀|²/w²)) on |ζ−ζ₀| < w.
    Bump { center: Vec<f64>, width: f64 },
    /// Samples on a uniform grid over [lo, hi] (one transverse dimension),
    /// joined by Catmull–Rom cubics; zero outside.
    Sampled {
        lo: f64,
        hi: f64,
        values: Vec<Complex64>,
    },
    /// Σ cᵢ ξᵢ.
    Sum { terms: Vec<(Complex64, XiProfile)> },
    /// ζ ↦ ξ(−ζ).
    Reflected { inner: Box<XiProfile> },
    /// ζ ↦ conj ξ(ζ).
    Conjugated { inner: Box<XiProfile> },
}

impl XiProfile {
    pub fn bump(center: Vec<f64>, width: f64) -> Self {
        XiProfile::Bump { center, width }
    }

    pub fn reflected(self) -> Self {
        XiProfile::Reflected {
            inner: Box::new(self),
        }
    }

    pub fn conjugated(self) -> Self {
        XiProfile::Conjugated {
            inner: Box::new(self),
        }
    }

    /// Number of transverse dimensions d − 1, if the profile fixes it.
    pub fn transverse_dim(&self) -> Option<usize> {
        match self {
            XiProfile::Bump { center, .. } => Some(center.len()),
            XiProfile::Sampled { .. } => Some(1),
            XiProfile::Sum { terms } => terms.iter().find_map(|(_, p)| p.transverse_dim()),
            XiProfile::Reflected { inner } | XiProfile::Conjugated { inner } => {
                inner.transverse_dim()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            XiProfile::Bump { center, width } => {
                if center.is_empty() || !(*width > 0.0) || !width.is_finite() {
                    return Err(Error::Config(
                        "bump profile needs a non-empty center and width > 0".into(),
                    ));
                }
            }
            XiProfile::Sampled { lo, hi, values } => {
                if !(hi > lo) || values.len() < 2 {
                    return Err(Error::Config(
                        "sampled profile needs lo < hi and at least two values".into(),
                    ));
                }
            }
            XiProfile::Sum { terms } => {
                let dim = self.transverse_dim();
                for (_, p) in terms {
                    p.validate()?;
                    if p.transverse_dim() != dim {
                        return Err(Error::Config("profile terms differ in dimension".into()));
                    }
                }
            }
            XiProfile::Reflected { inner } | XiProfile::Conjugated { inner } => inner.validate()?,
        }
        Ok(())
    }

    pub fn eval(&self, zeta: &[f64]) -> Complex64 {
        match self {
            XiProfile::Bump { center, width } => {
                let r2: f64 = zeta.iter().zip(center).map(|(z, c)| (z - c).powi(2)).sum();
                let u = r2 / (width * width);
                if u >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((-1.0 / (1.0 - u)).exp(), 0.0)
                }
            }
            XiProfile::Sampled { lo, hi, values } => catmull_rom(*lo, *hi, values, zeta[0]),
            XiProfile::Sum { terms } => terms.iter().map(|(c, p)| c * p.eval(zeta)).sum(),
            XiProfile::Reflected { inner } => {
                let neg: Vec<f64> = zeta.iter().map(|z| -z).collect();
                inner.eval(&neg)
            }
            XiProfile::Conjugated { inner } => inner.eval(zeta).conj(),
        }
    }

    /// Bounding box of the support, or `None` for an empty sum.
    pub fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            XiProfile::Bump { center, width } => Some((
                center.iter().map(|c| c - width).collect(),
                center.iter().map(|c| c + width).collect(),
            )),
            XiProfile::Sampled { lo, hi, .. } => Some((vec![*lo], vec![*hi])),
            XiProfile::Sum { terms } => {
                terms
                    .iter()
                    .filter_map(|(_, p)| p.support())
                    .reduce(|(alo, ahi), (blo, bhi)| {
                        (
                            alo.iter().zip(&blo).map(|(a, b)| a.min(*b)).collect(),
                            ahi.iter().zip(&bhi).map(|(a, b)| a.max(*b)).collect(),
                        )
                    })
            }
            XiProfile::Reflected { inner } => inner.support().map(|(lo, hi)| {
                (
                    hi.iter().map(|v| -v).collect(),
                    lo.iter().map(|v| -v).collect(),
                )
            }),
            XiProfile::Conjugated { inner } => inner.support(),
        }
    }
}

fn catmull_rom(lo: f64, hi: f64, values: &[Complex64], z: f64) -> Complex64 {
    let n = values.len();
    if z < lo || z > hi {
        return Complex64::new(0.0, 0.0);
    }
    let h = (hi - lo) / (n - 1) as f64;
    let s = (z - lo) / h;
    let i = (s.floor() as usize).min(n - 2);
    let t = s - i as f64;
    let at = |j: isize| -> Complex64 {
        if j < 0 || j as usize >= n {
            Complex64::new(0.0, 0.0)
        } else {
            values[j as usize]
        }
    };
    let i = i as isize;
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let t2 = t * t;
    let t3 = t2 * t;
    (p1 * 2.0
        + (p2 - p0) * t
        + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2
        + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * t3)
        * 0.5
}

/// (2π)^{−(d+1)/2}.
pub fn eigenfunction_constant(d: usize) -> f64 {
    (2.0 * PI).powf(-(d as f64 + 1.0) / 2.0)
}

fn dimension_of(y: &[f64], xi: &XiProfile) -> Result<usize> {
    xi.validate()?;
    if let Some(m) = xi.transverse_dim() {
        if m != y.len() {
            return Err(Error::Config(format!(
                "profile has {m} transverse dimensions but y has {}",
                y.len()
            )));
        }
    }
    if y.is_empty() || y.len() > 2 {
        return Err(Error::Config(format!(
            "eigenfunction supports d = 2 or 3, got d = {}",
            y.len() + 1
        )));
    }
    Ok(y.len() + 1)
}

/// c ∫ ξ(ζ) e^{iy·ζ} airy_reduction(x, ζ, λ) dζ by adaptive Gauss–Kronrod
/// over the support box of ξ (nested for two transverse dimensions).
pub fn free_eigenfunction(
    x: f64,
    y: &[f64],
    xi: &XiProfile,
    lambda: f64,
    tol: f64,
) -> Result<Complex64> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol = {tol} must be positive")));
    }
    let d = dimension_of(y, xi)?;
    let Some((lo, hi)) = xi.support() else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let c = eigenfunction_constant(d);
    let integrand = |zeta: &[f64]| {
        let phase = y.iter().zip(zeta).map(|(a, b)| a * b).sum::<f64>();
        xi.eval(zeta) * Complex64::from_polar(1.0, phase) * airy_reduction(x, zeta, lambda)
    };
    let not_converged = |err: f64| {
        Error::budget(
            "oscillatory",
            "free_eigenfunction",
            format!("{MAX_INTERVALS} subintervals left error estimate {err:e}"),
        )
    };
    let value = if d == 2 {
        let opts = AdaptiveOptions {
            abs_tol: tol / c,
            rel_tol: 0.0,
            max_intervals: MAX_INTERVALS,
        };
        let r = adaptive(|z| integrand(&[z]), lo[0], hi[0], &opts);
        if !r.converged {
            return Err(not_converged(r.error * c));
        }
        r.value
    } else {
        let width = hi[1] - lo[1];
        let inner_opts = AdaptiveOptions {
            abs_tol: 0.25 * tol / (c * width),
            rel_tol: 0.0,
            max_intervals: MAX_INTERVALS,
        };
        let outer_opts = AdaptiveOptions {
            abs_tol: 0.5 * tol / c,
            rel_tol: 0.0,
            max_intervals: MAX_INTERVALS,
        };
        let mut inner_failure = None;
        let r = adaptive(
            |z1| {
                let r = adaptive(|z2| integrand(&[z1, z2]), lo[1], hi[1], &inner_opts);
                if !r.converged && inner_failure.is_none() {
                    inner_failure = Some(r.error);
                }
                r.value
            },
            lo[0],
            hi[0],
            &outer_opts,
        );
        if let Some(err) = inner_failure {
            return Err(not_converged(err * c));
        }
        if !r.converged {
            return Err(not_converged(r.error * c));
        }
        r.value
    };
    Ok(value * c)
}

/// Σ± e^{∓iπd/4}/√(2π) · (2X)^{−d/4} · e^{±iθ₁(X, y)} · ξ(±ω), where
/// X = x + λ and ω = (2X)^{−1/2} y.
pub fn stationary_phase_eigenfunction(
    x: f64,
    y: &[f64],
    xi: &XiProfile,
    lambda: f64,
) -> Result<Complex64> {
    let d = dimension_of(y, xi)?;
    let big_x = x + lambda;
    let theta1 = theta1_calculus(big_x, y)?.value;
    let df = d as f64;
    let amp = (2.0 * PI).sqrt().recip() * (2.0 * big_x).powf(-df / 4.0);
    let scale = (2.0 * big_x).sqrt().recip();
    let omega: Vec<f64> = y.iter().map(|v| v * scale).collect();
    let neg: Vec<f64> = omega.iter().map(|v| -v).collect();
    let plus = Complex64::from_polar(amp, theta1 - PI * df / 4.0) * xi.eval(&omega);
    let minus = Complex64::from_polar(amp, -theta1 + PI * df / 4.0) * xi.eval(&neg);
    Ok(plus + minus)
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenfunctionSample {
    pub x: f64,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub exact: Complex64,
    pub asymptotic: Complex64,
    pub rel_error: f64,
}

/// Exact and asymptotic values at one point.
pub fn eigenfunction_sample(
    x: f64,
    y: &[f64],
    xi: &XiProfile,
    lambda: f64,
    tol: f64,
) -> Result<EigenfunctionSample> {
    let asymptotic = stationary_phase_eigenfunction(x, y, xi, lambda)?;
    let exact = free_eigenfunction(x, y, xi, lambda, tol)?;
    let diff = (exact - asymptotic).norm();
    let rel_error = if exact.norm() > 0.0 {
        diff / exact.norm()
    } else {
        diff
    };
    Ok(EigenfunctionSample {
        x,
        y: y.to_vec(),
        lambda,
        exact,
        asymptotic,
        rel_error,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceFit {
    pub samples: Vec<EigenfunctionSample>,
    pub fit: LineFit,
}

impl ConvergenceFit {
    pub fn exponent(&self) -> f64 {
        self.fit.slope
    }
}

/// Samples at y = (y/x)·x·e₁ for every x in `x_list` and fits
/// log rel_error against log x. The quadrature tolerance is relative to the
/// leading amplitude (2X)^{−d/4}/√(2π).
pub fn asymptotic_convergence(
    y_over_x: f64,
    x_list: &[f64],
    xi: &XiProfile,
    lambda: f64,
    rel_tol: f64,
) -> Result<ConvergenceFit> {
    if x_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("x_list must be strictly increasing".into()));
    }
    let m = xi
        .transverse_dim()
        .ok_or_else(|| Error::Config("profile has no transverse dimension".into()))?;
    let d = (m + 1) as f64;
    let samples: Vec<EigenfunctionSample> = x_list
        .par_iter()
        .map(|&x| {
            let mut y = vec![0.0; m];
            y[0] = y_over_x * x;
            let scale = (2.0 * (x + lambda)).powf(-d / 4.0) / (2.0 * PI).sqrt();
            eigenfunction_sample(x, &y, xi, lambda, rel_tol * scale)
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let errs: Vec<f64> = samples.iter().map(|s| s.rel_error).collect();
    let fit = fit::power_law(&xs, &errs)?;
    Ok(ConvergenceFit { samples, fit })
}
