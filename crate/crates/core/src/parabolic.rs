//! Parabolic coordinates f = (r + x)^{1/2} (mollified), g = y/f, the
//! approximate phase θ = f³/3 and the exact eikonal phase
//! θ₁ = (4/3)(x + s)^{1/2}(x − s/2), s = (x² − |y|²)^{1/2}.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Points with r + x above this value satisfy f² = r + x exactly.
pub const IDENTITY_THRESHOLD: f64 = 2.0;

/// Relative caustic margin: θ₁ needs x² − |y|² > CAUSTIC_MARGIN·x².
pub const CAUSTIC_MARGIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicPoint {
    pub f: f64,
    pub g: Vec<f64>,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseData {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major d×d matrix, index 0 is the field direction.
    pub hessian: Vec<Vec<f64>>,
    pub laplacian: f64,
}

fn norm2(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

fn radius(x: f64, y: &[f64]) -> f64 {
    (x * x + norm2(y)).sqrt()
}

/// r + x without cancellation on the negative x-axis, where it equals
/// |y|²/(r − x).
fn r_plus_x(x: f64, y: &[f64], r: f64) -> f64 {
    if x >= 0.0 {
        r + x
    } else {
        norm2(y) / (r - x)
    }
}

// Blend on u ∈ [0, 1]: F1 is the Beta(2, 4) distribution function and
// F2(u) = ∫₀ᵘ v F1'(v) dv, so that ∫₀ᵘ F1 = u F1 − F2.
fn blend_f1(u: f64) -> f64 {
    u * u * (10.0 + u * (-20.0 + u * (15.0 - 4.0 * u)))
}

fn blend_f2(u: f64) -> f64 {
    20.0 * u * u * u * (1.0 / 3.0 + u * (-0.75 + u * (0.6 - u / 6.0)))
}

/// The mollifier f̆ and its first two derivatives: f̆ = 1 for t ≤ 1/2,
/// f̆ = t for t ≥ 2, C² and convex in between.
pub fn mollifier(t: f64) -> (f64, f64, f64) {
    if t <= 0.5 {
        (1.0, 0.0, 0.0)
    } else if t >= 2.0 {
        (t, 1.0, 0.0)
    } else {
        let u = (t - 0.5) / 1.5;
        let f1 = blend_f1(u);
        let value = 1.0 + 1.5 * (u * f1 - blend_f2(u));
        let second = 20.0 * u * (1.0 - u).powi(3) / 1.5;
        (value, f1, second)
    }
}

pub fn to_parabolic(x: f64, y: &[f64]) -> ParabolicPoint {
    let r = radius(x, y);
    let f = mollifier(r_plus_x(x, y, r)).0.sqrt();
    ParabolicPoint {
        f,
        g: y.iter().map(|v| v / f).collect(),
        r,
    }
}

/// ∇f, valid everywhere except the origin (where it is zero).
pub fn grad_f(x: f64, y: &[f64]) -> Vec<f64> {
    let r = radius(x, y);
    let u = r_plus_x(x, y, r);
    let (fb, dfb, _) = mollifier(u);
    if r == 0.0 || dfb == 0.0 {
        return vec![0.0; y.len() + 1];
    }
    let f = fb.sqrt();
    let c = dfb / (2.0 * f);
    let mut g = Vec::with_capacity(y.len() + 1);
    g.push(c * u / r);
    g.extend(y.iter().map(|v| c * v / r));
    g
}

/// Rows ∇g_i for i = 1..d−1.
pub fn grad_g(x: f64, y: &[f64]) -> Vec<Vec<f64>> {
    let f = to_parabolic(x, y).f;
    let gf = grad_f(x, y);
    (0..y.len())
        .map(|i| {
            let mut row: Vec<f64> = gf.iter().map(|v| -y[i] * v / (f * f)).collect();
            row[i + 1] += 1.0 / f;
            row
        })
        .collect()
}

/// ∇²(f²) = f̆''(r+x)∇(r+x)∇(r+x)ᵀ + f̆'(r+x)∇²r; positive semidefinite.
pub fn hessian_f_squared(x: f64, y: &[f64]) -> Vec<Vec<f64>> {
    let d = y.len() + 1;
    let r = radius(x, y);
    let u = r_plus_x(x, y, r);
    let (_, d1, d2) = mollifier(u);
    let mut h = vec![vec![0.0; d]; d];
    if r == 0.0 {
        return h;
    }
    let pos: Vec<f64> = std::iter::once(x).chain(y.iter().copied()).collect();
    let mut du: Vec<f64> = pos.iter().map(|p| p / r).collect();
    du[0] = u / r;
    for i in 0..d {
        for j in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            let hess_r = (delta - pos[i] * pos[j] / (r * r)) / r;
            h[i][j] = d2 * du[i] * du[j] + d1 * hess_r;
        }
    }
    h
}

fn check_dimension(op: &'static str, y: &[f64], d: usize) -> Result<()> {
    if y.len() + 1 != d || d < 2 {
        return Err(Error::domain(
            op,
            format!("point has {} coordinates, dimension is {d}", y.len() + 1),
        ));
    }
    Ok(())
}

fn check_identity_regime(op: &'static str, x: f64, r: f64) -> Result<()> {
    if !(r + x > IDENTITY_THRESHOLD) {
        return Err(Error::domain(op, format!("r + x = {} not above 2", r + x)));
    }
    Ok(())
}

/// J = f^{2−d}/(f² + g²), the Jacobian of (x, y) ↦ (f, g).
pub fn jacobian_det(x: f64, y: &[f64], d: usize) -> Result<f64> {
    check_dimension("jacobian_det", y, d)?;
    let p = to_parabolic(x, y);
    check_identity_regime("jacobian_det", x, p.r)?;
    Ok(p.f.powi(2 - d as i32) / (p.f * p.f + norm2(&p.g)))
}

/// θ = f³/3 with gradient, Hessian and Laplacian from closed forms.
pub fn theta_calculus(x: f64, y: &[f64], d: usize) -> Result<PhaseData> {
    check_dimension("theta_calculus", y, d)?;
    let p = to_parabolic(x, y);
    let (f, r) = (p.f, p.r);
    check_identity_regime("theta_calculus", x, r)?;
    let f3 = f * f * f;
    let (r2, r3) = (r * r, r * r * r);
    let mut gradient = Vec::with_capacity(d);
    gradient.push(f3 / (2.0 * r));
    gradient.extend(y.iter().map(|v| f * v / (2.0 * r)));
    let mut hessian = vec![vec![0.0; d]; d];
    hessian[0][0] = -0.5 * x * f3 / r3 + 0.75 * f3 / r2;
    for a in 0..d - 1 {
        let h1a = -0.5 * y[a] * f3 / r3 + 0.75 * y[a] * f / r2;
        hessian[0][a + 1] = h1a;
        hessian[a + 1][0] = h1a;
        for b in 0..d - 1 {
            let yy = y[a] * y[b];
            let kron = if a == b { 0.5 * f / r } else { 0.0 };
            hessian[a + 1][b + 1] = -0.5 * yy * f / r3 + 0.25 * yy / (r2 * f) + kron;
        }
    }
    Ok(PhaseData {
        value: f3 / 3.0,
        gradient,
        hessian,
        laplacian: 0.5 * d as f64 * f / r,
    })
}

/// s = (x² − |y|²)^{1/2}, rejecting points at or past the caustic.
fn caustic_root(op: &'static str, x: f64, y: &[f64]) -> Result<f64> {
    let ny = norm2(y).sqrt();
    if !(x > 0.0) || !x.is_finite() || !ny.is_finite() {
        return Err(Error::domain(
            op,
            format!("requires finite x > 0, got x = {x}"),
        ));
    }
    let s2 = (x - ny) * (x + ny);
    if !(s2 > CAUSTIC_MARGIN * x * x) {
        return Err(Error::domain(
            op,
            format!("x² − |y|² = {s2} inside the caustic margin"),
        ));
    }
    Ok(s2.sqrt())
}

/// θ₁ with gradient, Hessian and Laplacian.
pub fn theta1_calculus(x: f64, y: &[f64]) -> Result<PhaseData> {
    let s = caustic_root("theta1_calculus", x, y)?;
    let d = y.len() + 1;
    let xs = x + s;
    let root = xs.sqrt();
    let mut gradient = Vec::with_capacity(d);
    gradient.push(root);
    gradient.extend(y.iter().map(|v| root * v / xs));
    let mut hessian = vec![vec![0.0; d]; d];
    hessian[0][0] = 0.5 * root / s;
    for a in 0..d - 1 {
        let h1a = -0.5 * y[a] / (s * root);
        hessian[0][a + 1] = h1a;
        hessian[a + 1][0] = h1a;
        for b in 0..d - 1 {
            let kron = if a == b { 1.0 / root } else { 0.0 };
            hessian[a + 1][b + 1] = kron + y[a] * y[b] / (2.0 * s * xs * root);
        }
    }
    let laplacian = (0..d).map(|i| hessian[i][i]).sum();
    Ok(PhaseData {
        value: 4.0 / 3.0 * root * (x - 0.5 * s),
        gradient,
        hessian,
        laplacian,
    })
}

/// ∇θ₁ in double-double arithmetic.
pub(crate) fn grad_theta1_dd(x: Dd, y: &[Dd]) -> Result<Vec<Dd>> {
    let yf: Vec<f64> = y.iter().map(|v| v.to_f64()).collect();
    caustic_root("grad_theta1", x.to_f64(), &yf)?;
    let ny2 = y.iter().fold(Dd::ZERO, |acc, v| acc + v.square());
    let s = (x.square() - ny2).sqrt();
    let xs = x + s;
    let root = xs.sqrt();
    let mut g = Vec::with_capacity(y.len() + 1);
    g.push(root);
    g.extend(y.iter().map(|v| root * *v / xs));
    Ok(g)
}

/// ½|∇θ₁|² − x, with the gradient and the residual formed in
/// double-double so that rounding does not swamp the identity at large x.
pub fn eikonal_residual(x: f64, y: &[f64]) -> Result<f64> {
    let yd: Vec<Dd> = y.iter().map(|v| Dd::new(*v)).collect();
    let g = grad_theta1_dd(Dd::new(x), &yd)?;
    let half = g.iter().fold(Dd::ZERO, |acc, v| acc + v.square()) * 0.5;
    Ok((half - x).to_f64())
}

/// θ₁ − θ, of order f³|y/x|⁴ near the axis.
pub fn theta1_minus_theta(x: f64, y: &[f64]) -> Result<f64> {
    let t1 = theta1_calculus(x, y)?;
    let p = to_parabolic(x, y);
    check_identity_regime("theta1_minus_theta", x, p.r)?;
    Ok(t1.value - p.f.powi(3) / 3.0)
}

/// f₁ = (3θ₁)^{1/3}, the parabolic variable attached to θ₁.
pub fn f1_from_theta1(x: f64, y: &[f64]) -> Result<f64> {
    Ok((3.0 * theta1_calculus(x, y)?.value).cbrt())
}
