//! Transport symbols b_k, q_k along the free Stark flow:
//! b₀ = 1, q₀ = q, b_k = i∫₀^{±∞} q_{k−1}(Θ(t)p) dt and
//! q_k = q b_k − ½Δ_{(x,y)} b_k, so that i(∂_η + (η,ζ)·∇)b_k = q_{k−1}.
//!
//! Integrals use the substitution t = τ sinh v with τ = (2x + 2⟨y⟩_m)^{1/2}
//! and composite Gauss–Legendre panels in v. The panel count is chosen
//! adaptively at the requested point and then frozen for every stencil
//! point around it, which keeps the computed symbols smooth in p so that
//! finite differences of them are meaningful.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{free_flow, in_region_x, japanese_bracket, PhasePoint, Sign};
use crate::error::{Error, Result};
use crate::fit::{self, Z95};
use crate::potentials::PotentialSpec;
use crate::quadrature::GaussLegendre;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    /// Region parameters (m, ε) of X±_ε.
    pub m: f64,
    pub eps: f64,
    /// Integration horizon; the remainder is covered by the tail bound.
    pub t_max: f64,
    pub tol: f64,
    pub k_max: usize,
    /// Laplacian step is `laplacian_step·(1 + |x|)^{1/2}`.
    pub laplacian_step: f64,
    pub gauss_order: usize,
    pub min_panels: usize,
    pub max_panels: usize,
    /// Fixed panel count for symbols evaluated inside other integrals.
    pub inner_panels: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            m: 1.0,
            eps: 0.3,
            t_max: 1e12,
            tol: 1e-10,
            k_max: 2,
            laplacian_step: 1e-3,
            gauss_order: 16,
            min_panels: 8,
            max_panels: 512,
            inner_panels: 32,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.m > 0.0
            && self.eps > 0.0
            && self.eps < 1.0
            && self.t_max > 0.0
            && self.tol > 0.0
            && self.laplacian_step > 0.0
            && self.gauss_order >= 2
            && self.min_panels >= 1
            && self.max_panels >= self.min_panels
            && self.inner_panels >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid transport configuration {self:?}"
            )))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolValue {
    pub k: usize,
    pub value: Complex64,
    pub point: PhasePoint,
    pub sign: Sign,
    /// Quadrature error estimate plus tail bound.
    pub error: f64,
}

/// A frozen quadrature rule on [0, t_max] in the variable t = τ sinh v.
#[derive(Clone, Copy, Debug)]
struct Rule {
    tau: f64,
    v_max: f64,
    panels: usize,
}

struct Context<'a> {
    spec: &'a PotentialSpec,
    cfg: &'a TransportConfig,
    sign: Sign,
    gl: GaussLegendre,
}

fn flow_scale(p: &PhasePoint, m: f64) -> f64 {
    (2.0 * p.x + 2.0 * japanese_bracket(&p.y, m))
        .max(1.0)
        .sqrt()
}

fn shifted(p: &PhasePoint, axis: usize, h: f64) -> PhasePoint {
    let mut q = p.clone();
    if axis == 0 {
        q.x += h;
    } else {
        q.y[axis - 1] += h;
    }
    q
}

impl<'a> Context<'a> {
    fn new(spec: &'a PotentialSpec, cfg: &'a TransportConfig, sign: Sign) -> Self {
        Context {
            spec,
            cfg,
            sign,
            gl: GaussLegendre::new(cfg.gauss_order),
        }
    }

    fn rule(&self, p: &PhasePoint, panels: usize) -> Rule {
        let tau = flow_scale(p, self.cfg.m);
        Rule {
            tau,
            v_max: (self.cfg.t_max / tau).asinh(),
            panels,
        }
    }

    fn check_region(&self, op: &'static str, p: &PhasePoint) -> Result<()> {
        if !in_region_x(p, self.cfg.m, self.cfg.eps, self.sign) {
            return Err(Error::domain(
                op,
                format!("point {p:?} outside the region X for the chosen branch"),
            ));
        }
        Ok(())
    }

    fn step(&self, p: &PhasePoint) -> f64 {
        self.cfg.laplacian_step * (1.0 + p.x.abs()).sqrt()
    }

    /// q_j at p; for j ≥ 1 the inner b_j uses fixed rules centred at p.
    fn q_level(&self, j: usize, p: &PhasePoint) -> Result<Complex64> {
        let q = self.spec.eval(p.x, &p.y)?;
        if j == 0 {
            return Ok(Complex64::new(q, 0.0));
        }
        let rule = self.rule(p, self.cfg.inner_panels);
        let b = self.b_with_rule(j, p, rule)?;
        let lap = self.laplacian(j, p, rule)?;
        Ok(b * q - lap * 0.5)
    }

    /// Δ_{(x,y)} b_j at p with one Richardson refinement of the
    /// second-difference stencil; all stencil points share `rule`.
    fn laplacian(&self, j: usize, p: &PhasePoint, rule: Rule) -> Result<Complex64> {
        let h = self.step(p);
        let center = self.b_with_rule(j, p, rule)?;
        let d = p.dimension();
        let mut coarse = Complex64::new(0.0, 0.0);
        let mut fine = Complex64::new(0.0, 0.0);
        for axis in 0..d {
            for (hh, acc) in [(h, &mut coarse), (0.5 * h, &mut fine)] {
                let plus = self.b_with_rule(j, &shifted(p, axis, hh), rule)?;
                let minus = self.b_with_rule(j, &shifted(p, axis, -hh), rule)?;
                *acc += (plus + minus - center * 2.0) / (hh * hh);
            }
        }
        Ok((fine * 4.0 - coarse) / 3.0)
    }

    /// b_k at p with a fixed rule (no tail, no error estimate).
    fn b_with_rule(&self, k: usize, p: &PhasePoint, rule: Rule) -> Result<Complex64> {
        if self.spec.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let s = self.sign.value();
        let width = rule.v_max / rule.panels as f64;
        let half = 0.5 * width;
        let mut acc = Complex64::new(0.0, 0.0);
        for panel in 0..rule.panels {
            let mid = (panel as f64 + 0.5) * width;
            for (node, w) in self.gl.nodes.iter().zip(&self.gl.weights) {
                let v = mid + half * node;
                let t = rule.tau * v.sinh();
                let jac = rule.tau * v.cosh();
                let g = self.q_level(k - 1, &free_flow(p, s * t))?;
                acc += g * (w * half * jac);
            }
        }
        Ok(Complex64::new(0.0, s) * acc)
    }

    /// Top-level b_k: panel doubling until successive values agree to
    /// tol/2, plus the tail bound beyond t_max.
    fn b_adaptive(&self, k: usize, p: &PhasePoint) -> Result<(Complex64, Rule, f64)> {
        let mut panels = self.cfg.min_panels;
        let mut prev = self.b_with_rule(k, p, self.rule(p, panels))?;
        loop {
            if panels * 2 > self.cfg.max_panels {
                return Err(Error::budget(
                    "transport",
                    "symbol_b",
                    format!(
                        "quadrature not converged with {} panels",
                        self.cfg.max_panels
                    ),
                ));
            }
            panels *= 2;
            let rule = self.rule(p, panels);
            let next = self.b_with_rule(k, p, rule)?;
            let err = (next - prev).norm();
            if err <= 0.5 * self.cfg.tol {
                let tail = self.tail_bound(k, p)?;
                if tail > self.cfg.tol {
                    return Err(Error::budget(
                        "transport",
                        "symbol_b",
                        format!(
                            "tail bound {tail:e} beyond t_max = {:e} exceeds tol = {:e}",
                            self.cfg.t_max, self.cfg.tol
                        ),
                    ));
                }
                return Ok((next, rule, err + tail));
            }
            prev = next;
        }
    }

    /// ∫_T^∞ |q_{k−1}(Θ(±t)p)| dt ≤ |q_{k−1}(Θ(±T)p)|·T/(2kδ), using the
    /// decay |q_{k−1}∘Θ(t)| ~ t^{−(1+2kδ)} implied by
    /// 2x(t) + 2⟨y(t)⟩_m ≥ (1−ε)(t² + 2x + 2⟨y⟩_m).
    fn tail_bound(&self, k: usize, p: &PhasePoint) -> Result<f64> {
        let t = self.cfg.t_max;
        let end = free_flow(p, self.sign.value() * t);
        let g = self.q_level(k - 1, &end)?.norm();
        Ok(g * t / (2.0 * k as f64 * self.spec.delta))
    }
}

fn check_order(k: usize, cfg: &TransportConfig) -> Result<()> {
    if k == 0 || k > cfg.k_max {
        return Err(Error::Config(format!(
            "symbol order k = {k} outside 1..={}",
            cfg.k_max
        )));
    }
    Ok(())
}

/// b_k(p) on the chosen branch.
pub fn symbol_b(
    k: usize,
    p: &PhasePoint,
    spec: &PotentialSpec,
    sign: Sign,
    cfg: &TransportConfig,
) -> Result<SymbolValue> {
    cfg.validate()?;
    check_order(k, cfg)?;
    let ctx = Context::new(spec, cfg, sign);
    ctx.check_region("symbol_b", p)?;
    let (value, _, error) = ctx.b_adaptive(k, p)?;
    Ok(SymbolValue {
        k,
        value,
        point: p.clone(),
        sign,
        error,
    })
}

/// The two parts of q_k = q·b_k − ½Δb_k.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymbolQParts {
    pub q_times_b: Complex64,
    pub half_laplacian: Complex64,
}

impl SymbolQParts {
    pub fn value(&self) -> Complex64 {
        self.q_times_b - self.half_laplacian
    }
}

/// q_k(p), with Δb_k from a Richardson-refined central stencil of step
/// h (default `laplacian_step·(1 + |x|)^{1/2}`).
pub fn symbol_q(
    k: usize,
    p: &PhasePoint,
    spec: &PotentialSpec,
    sign: Sign,
    cfg: &TransportConfig,
    h: Option<f64>,
) -> Result<SymbolQParts> {
    cfg.validate()?;
    check_order(k, cfg)?;
    let mut local = cfg.clone();
    if let Some(h) = h {
        if !(h > 0.0) {
            return Err(Error::Config(format!("stencil step {h} must be positive")));
        }
        local.laplacian_step = h / (1.0 + p.x.abs()).sqrt();
    }
    let ctx = Context::new(spec, &local, sign);
    ctx.check_region("symbol_q", p)?;
    let step = ctx.step(p);
    for axis in 0..p.dimension() {
        for s in [-1.0, 1.0] {
            ctx.check_region("symbol_q", &shifted(p, axis, s * step))?;
        }
    }
    let (b, rule, _) = ctx.b_adaptive(k, p)?;
    let q = spec.eval(p.x, &p.y)?;
    let lap = ctx.laplacian(k, p, rule)?;
    Ok(SymbolQParts {
        q_times_b: b * q,
        half_laplacian: lap * 0.5,
    })
}

/// |i(∂_η + (η,ζ)·∇)b_k − q_{k−1}| at p, the derivative taken by a
/// central difference of step `h_eta` along V = (η, ζ, 1, 0).
pub fn transport_residual(
    k: usize,
    p: &PhasePoint,
    spec: &PotentialSpec,
    sign: Sign,
    cfg: &TransportConfig,
    h_eta: f64,
) -> Result<f64> {
    cfg.validate()?;
    check_order(k, cfg)?;
    if !(h_eta > 0.0) {
        return Err(Error::Config(format!("h_eta = {h_eta} must be positive")));
    }
    let ctx = Context::new(spec, cfg, sign);
    ctx.check_region("transport_residual", p)?;
    let along = |s: f64| PhasePoint {
        x: p.x + s * p.eta,
        y: p.y.iter().zip(&p.zeta).map(|(y, z)| y + s * z).collect(),
        eta: p.eta + s,
        zeta: p.zeta.clone(),
    };
    let (plus_p, minus_p) = (along(h_eta), along(-h_eta));
    ctx.check_region("transport_residual", &plus_p)?;
    ctx.check_region("transport_residual", &minus_p)?;
    let (_, rule, _) = ctx.b_adaptive(k, p)?;
    let plus = ctx.b_with_rule(k, &plus_p, rule)?;
    let minus = ctx.b_with_rule(k, &minus_p, rule)?;
    let derivative = (plus - minus) / (2.0 * h_eta);
    let target = ctx.q_level(k - 1, p)?;
    Ok((Complex64::new(0.0, 1.0) * derivative - target).norm())
}

/// Points (x, y = c·x·e₁, η = (2x)^{1/2}, ζ) along a ray.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ray {
    pub slope: f64,
    pub zeta: Vec<f64>,
    pub xs: Vec<f64>,
}

impl Ray {
    pub fn points(&self) -> Vec<PhasePoint> {
        self.xs
            .iter()
            .map(|&x| {
                let mut y = vec![0.0; self.zeta.len()];
                if let Some(first) = y.first_mut() {
                    *first = self.slope * x;
                }
                PhasePoint::new(x, y, (2.0 * x).sqrt(), self.zeta.clone())
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymbolDecay {
    pub b_slope: f64,
    pub b_half_width: f64,
    pub q_slope: f64,
    pub q_half_width: f64,
}

/// Log-log slopes of |b_k| and |q_k| against x along a ray.
pub fn decay_fit_symbols(
    k: usize,
    spec: &PotentialSpec,
    sign: Sign,
    ray: &Ray,
    cfg: &TransportConfig,
) -> Result<SymbolDecay> {
    let points = ray.points();
    if points.len() < 3 {
        return Err(Error::insufficient(
            "decay_fit_symbols",
            format!("{} ray samples, need at least 3", points.len()),
        ));
    }
    let mut bs = Vec::with_capacity(points.len());
    let mut qs = Vec::with_capacity(points.len());
    for p in &points {
        let parts = symbol_q(k, p, spec, sign, cfg, None)?;
        bs.push(symbol_b(k, p, spec, sign, cfg)?.value.norm());
        qs.push(parts.value().norm());
    }
    let fb = fit::power_law(&ray.xs, &bs)?;
    let fq = fit::power_law(&ray.xs, &qs)?;
    Ok(SymbolDecay {
        b_slope: fb.slope,
        b_half_width: Z95 * fb.slope_se,
        q_slope: fq.slope,
        q_half_width: Z95 * fq.slope_se,
    })
}
