//! Gamma and Airy functions, and the closed-form constants of the
//! diagonal kernel singularity.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// sin(πx) with exact argument reduction, so that zeros at the integers
/// are hit exactly and nearby values keep full relative accuracy.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// Γ(x) for real x off the non-positive integers.
///
/// Lanczos approximation (g = 7, nine terms) for x ≥ 1/2 and the
/// reflection formula below.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(
            "gamma_fn",
            format!("non-finite argument {x}"),
        ));
    }
    if x <= 0.0 && x == x.round() {
        return Err(Error::domain("gamma_fn", format!("pole at {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma_unchecked(1.0 - x));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // Split the power to postpone overflow for large arguments.
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * acc
}

// Ai(0) and -Ai'(0) as double-double pairs.
const AI0: Dd = Dd {
    hi: 0.355_028_053_887_817_2,
    lo: 2.052_336_324_362_12e-17,
};
const MINUS_AIP0: Dd = Dd {
    hi: 0.258_819_403_792_806_8,
    lo: -2.522_243_111_610_832e-17,
};

/// Below this |u| the Maclaurin series is summed in double-double.
const AIRY_SERIES_LIMIT: f64 = 8.0;

/// Airy function of the first kind on the real line.
///
/// Maclaurin series (double-double) for |u| ≤ 8, the standard
/// large-argument expansions beyond.
pub fn airy_ai(u: f64) -> f64 {
    if u.is_nan() {
        return f64::NAN;
    }
    if u.abs() <= AIRY_SERIES_LIMIT {
        airy_series(u)
    } else if u > 0.0 {
        airy_asymptotic_positive(u)
    } else {
        airy_asymptotic_negative(-u)
    }
}

/// Ai(u) = Ai(0)·f(u) + Ai'(0)·g(u) with
/// f = Σ 3^k (1/3)_k u^{3k}/(3k)! and g = Σ 3^k (2/3)_k u^{3k+1}/(3k+1)!.
pub(crate) fn airy_series(u: f64) -> f64 {
    let ud = Dd::new(u);
    let u3 = ud * ud * ud;
    let mut f_term = Dd::ONE;
    let mut g_term = ud;
    let mut f = f_term;
    let mut g = g_term;
    for k in 0..200 {
        let k3 = 3.0 * k as f64;
        f_term = f_term * u3 / ((k3 + 2.0) * (k3 + 3.0));
        g_term = g_term * u3 / ((k3 + 3.0) * (k3 + 4.0));
        f = f + f_term;
        g = g + g_term;
        if f_term.hi.abs() < 1e-34 * f.hi.abs().max(1.0)
            && g_term.hi.abs() < 1e-34 * g.hi.abs().max(1.0)
        {
            break;
        }
    }
    (AI0 * f - MINUS_AIP0 * g).to_f64()
}

/// Coefficients u_k of the Airy asymptotic series.
fn airy_u_coefficients(n: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(n);
    u.push(1.0);
    for k in 1..n {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
    }
    u
}

fn airy_asymptotic_positive(z: f64) -> f64 {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let coef = airy_u_coefficients(60);
    let mut sum = 0.0f64;
    let mut last = f64::INFINITY;
    let mut power = 1.0;
    for (k, c) in coef.iter().enumerate() {
        let term = c * power;
        if term.abs() > last || term.abs() < 1e-18 * sum.abs() {
            break;
        }
        sum += if k % 2 == 0 { term } else { -term };
        last = term.abs();
        power /= zeta;
    }
    (-zeta).exp() / (2.0 * PI.sqrt() * z.powf(0.25)) * sum
}

fn airy_asymptotic_negative(z: f64) -> f64 {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let coef = airy_u_coefficients(80);
    let mut even = 0.0;
    let mut odd = 0.0;
    let mut last = f64::INFINITY;
    let mut power = 1.0;
    for (k, c) in coef.iter().enumerate() {
        let term = c * power;
        if term.abs() > last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            even += sign * term;
        } else {
            odd += sign * term;
        }
        power /= zeta;
    }
    let phase = zeta - PI / 4.0;
    (phase.cos() * even + phase.sin() * odd) / (PI.sqrt() * z.powf(0.25))
}

/// Power-law description `prefactor·|ζ-ζ'|^exponent` of a kernel's
/// diagonal singularity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelLaw {
    pub prefactor: Complex64,
    pub exponent: f64,
}

/// c₁(α) = 2^{-3/2} Γ(1/4) Γ(α/2 − 1/4) / Γ(α/2): the constant in
/// ∫₀^∞ |(x, y)|^{-α} (2x)^{-1/2} dx = c₁ |y|^{1/2−α}.
pub fn c1_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 0.5) || !alpha.is_finite() {
        return Err(Error::domain(
            "c1_constant",
            format!("alpha = {alpha} must exceed 1/2 for convergence"),
        ));
    }
    Ok(2f64.powf(-1.5) * gamma_fn(0.25)? * gamma_fn(alpha / 2.0 - 0.25)? / gamma_fn(alpha / 2.0)?)
}

fn check_c2_range(d: usize, alpha: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(
            "c2_constant",
            format!("dimension d = {d} < 2"),
        ));
    }
    let upper = d as f64 - 0.5;
    if !(alpha > 0.5 && alpha < upper) {
        return Err(Error::domain(
            "c2_constant",
            format!("alpha = {alpha} outside (1/2, {upper})"),
        ));
    }
    Ok(())
}

/// Fully reduced form
/// c₂ = −i (2π)^{(1−d)/2} 2^{(d−1)/2−α} Γ(1/4) Γ(d/2 − 1/4 − α/2) / Γ(α/2).
pub fn c2_constant(d: usize, alpha: f64) -> Result<Complex64> {
    check_c2_range(d, alpha)?;
    let df = d as f64;
    let modulus = (2.0 * PI).powf((1.0 - df) / 2.0)
        * 2f64.powf((df - 1.0) / 2.0 - alpha)
        * gamma_fn(0.25)?
        * gamma_fn(df / 2.0 - 0.25 - alpha / 2.0)?
        / gamma_fn(alpha / 2.0)?;
    Ok(Complex64::new(0.0, -modulus))
}

/// The same constant assembled from c₁ and the (d−1)-dimensional Fourier
/// transform of |y|^{1/2−α}:
/// c₁ (2π)^{1−d} (−2i) (2π)^{(d−1)/2} 2^{d/2−α} Γ((d−1/2−α)/2) / Γ((α−1/2)/2).
pub fn c2_constant_via_c1(d: usize, alpha: f64) -> Result<Complex64> {
    check_c2_range(d, alpha)?;
    let df = d as f64;
    let real_part = c1_constant(alpha)?
        * (2.0 * PI).powf(1.0 - df)
        * (2.0 * PI).powf((df - 1.0) / 2.0)
        * 2f64.powf(df / 2.0 - alpha)
        * gamma_fn((df - 0.5 - alpha) / 2.0)?
        / gamma_fn((alpha - 0.5) / 2.0)?;
    Ok(Complex64::new(0.0, -2.0) * real_part)
}
