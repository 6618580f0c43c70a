//! Short-range Stark potentials q(x, y) and their gradients.
//!
//! Every built-in potential is radial, q = κ·Q(r) with r = |(x, y)|, and
//! decays at least like r^{-(1+2δ)/2}. A positive `softening` replaces r
//! by (r² + ε²)^{1/2} so that orbits may pass near the origin.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default regularization length for orbit integration.
pub const DEFAULT_SOFTENING: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    #[default]
    Zero,
    Homogeneous,
    Coulomb,
    Table,
}

/// Radial profile sampled at strictly increasing radii.
///
/// Between samples the profile is a C² cubic spline, clamped to zero slope
/// at the first radius (inside which it is held constant) and to the slope
/// of the power-law continuation r^{-(1+2δ)/2} at the last. Gradients use
/// the exact derivative of the spline, so forces and energies stay
/// consistent along integrated orbits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialTable {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Spline second derivatives, keyed by the tail power they were built for.
    #[serde(skip)]
    moments: OnceLock<(f64, Vec<f64>)>,
}

impl PartialEq for RadialTable {
    fn eq(&self, other: &Self) -> bool {
        self.radii == other.radii && self.values == other.values
    }
}

impl RadialTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Self {
        RadialTable {
            radii,
            values,
            moments: OnceLock::new(),
        }
    }

    fn moments(&self, p: f64) -> std::borrow::Cow<'_, [f64]> {
        let (cached_p, m) = self.moments.get_or_init(|| (p, spline_moments(self, p)));
        if *cached_p == p {
            std::borrow::Cow::Borrowed(m)
        } else {
            std::borrow::Cow::Owned(spline_moments(self, p))
        }
    }
}

/// Second derivatives of the clamped cubic spline (Thomas algorithm).
fn spline_moments(t: &RadialTable, p: f64) -> Vec<f64> {
    let (x, y) = (&t.radii, &t.values);
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let end_slope = -p * y[n - 1] / x[n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 2.0 * h[0];
    upper[0] = h[0];
    rhs[0] = 6.0 * slope[0];
    for i in 1..n - 1 {
        lower[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i];
        rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
    }
    lower[n - 1] = h[n - 2];
    diag[n - 1] = 2.0 * h[n - 2];
    rhs[n - 1] = 6.0 * (end_slope - slope[n - 2]);
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub kappa: f64,
    /// Homogeneity exponent; fixed to 1 for Coulomb, unused otherwise.
    pub alpha: f64,
    /// Declared decay parameter δ ∈ (0, 1/2].
    pub delta: f64,
    pub softening: f64,
    /// With zero softening, evaluation closer than this to the origin fails.
    pub exclusion_radius: f64,
    pub table: Option<RadialTable>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            kind: PotentialKind::Zero,
            kappa: 1.0,
            alpha: 1.0,
            delta: 0.5,
            softening: DEFAULT_SOFTENING,
            exclusion_radius: 0.0,
            table: None,
        }
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec::default()
    }

    pub fn coulomb(kappa: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Coulomb,
            kappa,
            softening: DEFAULT_SOFTENING,
            ..PotentialSpec::default()
        }
    }

    /// κ r^{-α}; the declared δ defaults to min(α − 1/2, 1/2).
    pub fn homogeneous(kappa: f64, alpha: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Homogeneous,
            kappa,
            alpha,
            delta: (alpha - 0.5).min(0.5),
            softening: DEFAULT_SOFTENING,
            ..PotentialSpec::default()
        }
    }

    pub fn table(kappa: f64, table: RadialTable, delta: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Table,
            kappa,
            delta,
            softening: DEFAULT_SOFTENING,
            table: Some(table),
            ..PotentialSpec::default()
        }
    }

    pub fn with_softening(mut self, softening: f64) -> Self {
        self.softening = softening;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// The exact power law, as used by the kernel formulas.
    pub fn unsoftened(&self) -> Self {
        let mut s = self.clone();
        s.softening = 0.0;
        s
    }

    pub fn is_zero(&self) -> bool {
        self.kind == PotentialKind::Zero || self.kappa == 0.0
    }

    /// Checks the invariants of the potential class in dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("potential: {m}")));
        if d < 2 {
            return bad(format!("dimension {d} < 2"));
        }
        if !self.kappa.is_finite() {
            return bad("kappa must be finite".into());
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return bad(format!("delta = {} outside (0, 1/2]", self.delta));
        }
        if !(self.softening >= 0.0) || !self.softening.is_finite() {
            return bad("softening must be finite and non-negative".into());
        }
        if !(self.exclusion_radius >= 0.0) {
            return bad("exclusion_radius must be non-negative".into());
        }
        match self.kind {
            PotentialKind::Zero => {}
            PotentialKind::Coulomb => {
                if self.alpha != 1.0 || self.delta != 0.5 {
                    return bad("coulomb requires alpha = 1 and delta = 1/2".into());
                }
            }
            PotentialKind::Homogeneous => {
                let upper = d as f64 - 0.5;
                if !(self.alpha > 0.5 && self.alpha < upper) {
                    return bad(format!("alpha = {} outside (1/2, {upper})", self.alpha));
                }
                if self.alpha - 0.5 < self.delta - 1e-12 {
                    return bad(format!(
                        "declared delta = {} exceeds alpha - 1/2 = {}",
                        self.delta,
                        self.alpha - 0.5
                    ));
                }
            }
            PotentialKind::Table => {
                let Some(t) = &self.table else {
                    return bad("table kind requires a table".into());
                };
                if t.radii.len() != t.values.len() || t.radii.len() < 2 {
                    return bad("table needs at least two (radius, value) pairs".into());
                }
                if t.radii[0] <= 0.0 || t.radii.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("table radii must be positive and strictly increasing".into());
                }
                if t.values.iter().any(|v| !v.is_finite()) {
                    return bad("table values must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// Radial decay power p with |q| ≤ C r^{-p} for large r.
    pub fn decay_power(&self) -> f64 {
        match self.kind {
            PotentialKind::Zero => f64::INFINITY,
            PotentialKind::Coulomb => 1.0,
            PotentialKind::Homogeneous => self.alpha,
            PotentialKind::Table => 0.5 + self.delta,
        }
    }

    /// Constant C in |q| ≤ C r^{-p}.
    pub fn decay_constant(&self) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Coulomb | PotentialKind::Homogeneous => self.kappa.abs(),
            PotentialKind::Table => {
                let p = self.decay_power();
                let t = self.table.as_ref().expect("validated table");
                // The plateau inside the first radius is bounded by v₀ r₀^p there.
                t.radii
                    .iter()
                    .zip(&t.values)
                    .map(|(r, v)| v.abs() * r.powf(p))
                    .fold(0.0, f64::max)
                    * self.kappa.abs()
                    * 1.5
            }
        }
    }

    fn check_point(&self, op: &'static str, r2: f64) -> Result<()> {
        if !r2.is_finite() {
            return Err(Error::domain(op, "non-finite evaluation point"));
        }
        if self.softening == 0.0 && !self.is_zero() {
            let r = r2.sqrt();
            if r2 == 0.0 || r < self.exclusion_radius {
                return Err(Error::domain(
                    op,
                    format!("r = {r} inside the exclusion ball with zero softening"),
                ));
            }
        }
        Ok(())
    }

    /// Profile value Q and (1/r)·dQ/dr at squared radius r², including κ.
    fn radial(&self, r2: f64) -> (f64, f64) {
        let eps2 = self.softening * self.softening;
        match self.kind {
            PotentialKind::Zero => (0.0, 0.0),
            PotentialKind::Coulomb | PotentialKind::Homogeneous => {
                let s = r2 + eps2;
                let v = self.kappa * s.powf(-0.5 * self.alpha);
                (v, -self.alpha * v / s)
            }
            PotentialKind::Table => {
                let reff = (r2 + eps2).sqrt();
                let t = self.table.as_ref().expect("validated table");
                let (v, dv) = interpolate_table(t, reff, self.decay_power());
                // d/dr of Q(r_eff) is Q'(r_eff)·r/r_eff, so (1/r)·dQ/dr = Q'/r_eff.
                let inner = if reff > 0.0 { dv / reff } else { 0.0 };
                (self.kappa * v, self.kappa * inner)
            }
        }
    }

    pub fn eval(&self, x: f64, y: &[f64]) -> Result<f64> {
        let r2 = x * x + y.iter().map(|v| v * v).sum::<f64>();
        self.check_point("eval_potential", r2)?;
        Ok(self.radial(r2).0)
    }

    /// q and ∇q, the gradient written into `grad` as (∂ₓq, ∇_y q).
    pub fn eval_with_grad(&self, x: f64, y: &[f64], grad: &mut [f64]) -> Result<f64> {
        let r2 = x * x + y.iter().map(|v| v * v).sum::<f64>();
        self.check_point("grad_potential", r2)?;
        let (v, dr) = self.radial(r2);
        grad[0] = dr * x;
        for (g, yi) in grad[1..].iter_mut().zip(y) {
            *g = dr * yi;
        }
        Ok(v)
    }

    pub fn grad(&self, x: f64, y: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; y.len() + 1];
        self.eval_with_grad(x, y, &mut g)?;
        Ok(g)
    }
}

fn interpolate_table(t: &RadialTable, r: f64, p: f64) -> (f64, f64) {
    let n = t.radii.len();
    if r <= t.radii[0] {
        return (t.values[0], 0.0);
    }
    if r >= t.radii[n - 1] {
        let v = t.values[n - 1] * (r / t.radii[n - 1]).powf(-p);
        return (v, -p * v / r);
    }
    let m = t.moments(p);
    let i = t.radii.partition_point(|&ri| ri <= r) - 1;
    let h = t.radii[i + 1] - t.radii[i];
    let a = (t.radii[i + 1] - r) / h;
    let b = 1.0 - a;
    let (y0, y1) = (t.values[i], t.values[i + 1]);
    let value =
        a * y0 + b * y1 + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    let deriv = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m[i]
        + (3.0 * b * b - 1.0) / 6.0 * h * m[i + 1];
    (value, deriv)
}

/// q(x, y) for the given potential.
pub fn eval_potential(spec: &PotentialSpec, x: f64, y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// ∇q(x, y) as (∂ₓq, ∇_y q).
pub fn grad_potential(spec: &PotentialSpec, x: f64, y: &[f64]) -> Result<Vec<f64>> {
    spec.grad(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_potential_is_zero_everywhere() {
        let z = PotentialSpec::zero();
        assert_eq!(z.eval(0.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(z.grad(1.0, &[2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn coulomb_at_three_four() {
        let c = PotentialSpec::coulomb(1.0).with_softening(0.0);
        assert!((c.eval(3.0, &[4.0]).unwrap() - 0.2).abs() < 1e-16);
        let g = c.grad(3.0, &[4.0]).unwrap();
        assert!((g[0] + 3.0 / 125.0).abs() < 1e-16);
        assert!((g[1] + 4.0 / 125.0).abs() < 1e-16);
    }

    #[test]
    fn homogeneous_examples() {
        let h = PotentialSpec::homogeneous(2.0, 2.0).with_softening(0.0);
        assert!((h.eval(0.0, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let h1 = PotentialSpec::homogeneous(1.0, 2.0).with_softening(0.0);
        let g = h1.grad(1.0, &[0.0]).unwrap();
        assert!((g[0] + 2.0).abs() < 1e-15 && g[1] == 0.0);
    }

    #[test]
    fn origin_without_softening_is_a_domain_error() {
        let c = PotentialSpec::coulomb(1.0).with_softening(0.0);
        assert!(matches!(c.eval(0.0, &[0.0]), Err(Error::Domain { .. })));
        let mut ball = c.clone();
        ball.exclusion_radius = 0.5;
        assert!(ball.eval(0.1, &[0.1]).is_err());
        assert!(ball.eval(1.0, &[0.0]).is_ok());
        let soft = PotentialSpec::coulomb(1.0);
        assert!(soft.eval(0.0, &[0.0]).unwrap().is_finite());
    }

    #[test]
    fn validation_rules() {
        assert!(PotentialSpec::coulomb(1.0).validate(3).is_ok());
        assert!(PotentialSpec::homogeneous(1.0, 2.6).validate(3).is_err());
        assert!(PotentialSpec::homogeneous(1.0, 1.5).validate(3).is_ok());
        assert!(PotentialSpec::coulomb(1.0)
            .with_delta(0.3)
            .validate(3)
            .is_err());
        assert!(PotentialSpec::zero().validate(1).is_err());
        let mut t =
            PotentialSpec::table(1.0, RadialTable::new(vec![1.0, 0.5], vec![1.0, 1.0]), 0.5);
        assert!(t.validate(2).is_err());
        t.table = None;
        assert!(t.validate(2).is_err());
    }

    #[test]
    fn table_reproduces_sampled_coulomb() {
        let radii: Vec<f64> = (0..200).map(|i| 0.5 * 1.05f64.powi(i)).collect();
        let values: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
        let spec =
            PotentialSpec::table(1.0, RadialTable::new(radii, values), 0.5).with_softening(0.0);
        spec.validate(2).unwrap();
        let v = spec.eval(3.0, &[4.0]).unwrap();
        assert!((v - 0.2).abs() < 1e-5);
        // Beyond the table the power-law continuation is exact for 1/r.
        let far = spec.eval(1e6, &[0.0]).unwrap();
        assert!((far - 1e-6).abs() < 1e-12);
    }

    #[test]
    fn table_gradient_matches_central_differences() {
        let radii: Vec<f64> = (0..60).map(|i| 0.3 * 1.1f64.powi(i)).collect();
        let values: Vec<f64> = radii.iter().map(|r| (1.0 + r * r).powf(-0.7)).collect();
        let spec = PotentialSpec::table(0.8, RadialTable::new(radii, values), 0.2);
        for (x, y) in [(1.3, 0.4), (-2.0, 5.5), (40.0, -3.0), (150.0, 20.0)] {
            let g = spec.grad(x, &[y]).unwrap();
            let r = f64::hypot(x, y);
            let h = 1e-6 * r.max(1.0);
            let fx =
                (spec.eval(x + h, &[y]).unwrap() - spec.eval(x - h, &[y]).unwrap()) / (2.0 * h);
            let fy =
                (spec.eval(x, &[y + h]).unwrap() - spec.eval(x, &[y - h]).unwrap()) / (2.0 * h);
            let scale = g[0].abs().max(g[1].abs());
            assert!((g[0] - fx).abs() < 1e-6 * scale && (g[1] - fy).abs() < 1e-6 * scale);
        }
    }
}
