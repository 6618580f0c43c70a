//! Free and perturbed classical Stark dynamics for
//! h = ½(η² + |ζ|²) − x + q(x, y).
//!
//! Perturbed orbits are integrated in the interaction picture: the state
//! is the deviation Δ(t) = p(t) − Θ(t)p₀ from the free orbit, which stays
//! small while x and η grow like t² and t. Observables that cancel to many
//! digits (γ_∥ ~ t⁻² next to η ~ t) are reconstructed from p₀ and Δ in
//! double-double arithmetic.

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::fit::{self, Z95};
use crate::ode::{self, Accepted, Control, OdeOptions};
use crate::parabolic::grad_theta1_dd;
use crate::potentials::{PotentialKind, PotentialSpec};

/// Observables are defined for x > C and |y|/x < 1/C.
pub const THETA1_DOMAIN_C: f64 = 10.0;

/// An orbit counts as escaping after this many consecutive accepted steps
/// with x > ESCAPE_X and ±η positive and growing.
pub const ESCAPE_X: f64 = 100.0;
pub const ESCAPE_STEPS: usize = 10;

/// Observable magnitudes at or below this are treated as exact zeros;
/// it sits well above the double-double noise of reconstructed points.
pub const ZERO_FLOOR: f64 = 1e-20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: Vec<f64>,
    pub eta: f64,
    pub zeta: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: f64, y: Vec<f64>, eta: f64, zeta: Vec<f64>) -> Self {
        assert_eq!(y.len(), zeta.len(), "y and zeta must have equal length");
        PhasePoint { x, y, eta, zeta }
    }

    pub fn dimension(&self) -> usize {
        self.y.len() + 1
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.eta.is_finite()
            && self.y.iter().chain(&self.zeta).all(|v| v.is_finite())
    }

    /// Free Stark energy ½(η² + |ζ|²) − x.
    pub fn free_energy(&self) -> f64 {
        0.5 * (self.eta * self.eta + norm2(&self.zeta)) - self.x
    }

    pub fn energy(&self, spec: &PotentialSpec) -> Result<f64> {
        Ok(self.free_energy() + spec.eval(self.x, &self.y)?)
    }

    /// Time-reflected point (x, y, −η, −ζ).
    pub fn reflected(&self) -> Self {
        PhasePoint {
            x: self.x,
            y: self.y.clone(),
            eta: -self.eta,
            zeta: self.zeta.iter().map(|v| -v).collect(),
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Θ(t)p₀ = (x₀ + tη₀ + t²/2, y₀ + tζ₀, η₀ + t, ζ₀).
pub fn free_flow(p0: &PhasePoint, t: f64) -> PhasePoint {
    PhasePoint {
        x: p0.x + t * p0.eta + 0.5 * t * t,
        y: p0.y.iter().zip(&p0.zeta).map(|(y, z)| y + t * z).collect(),
        eta: p0.eta + t,
        zeta: p0.zeta.clone(),
    }
}

/// Free flow in double-double, as (x, y, η, ζ).
fn free_flow_dd(p0: &PhasePoint, t: f64) -> (Dd, Vec<Dd>, Dd, Vec<Dd>) {
    let td = Dd::new(t);
    let x = Dd::new(p0.x) + td * p0.eta + td * t * 0.5;
    let y =
        p0.y.iter()
            .zip(&p0.zeta)
            .map(|(y, z)| Dd::new(*y) + td * *z)
            .collect();
    let eta = Dd::new(p0.eta) + t;
    let zeta = p0.zeta.iter().map(|z| Dd::new(*z)).collect();
    (x, y, eta, zeta)
}

/// A sampled orbit. Times increase; energies are h along the orbit.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub energies: Vec<f64>,
    reference: PhasePoint,
    deviations: Vec<Vec<f64>>,
}

impl Trajectory {
    fn new(reference: PhasePoint) -> Self {
        Trajectory {
            times: Vec::new(),
            points: Vec::new(),
            energies: Vec::new(),
            reference,
            deviations: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.reference.dimension()
    }

    pub fn initial(&self) -> &PhasePoint {
        &self.reference
    }

    pub fn last(&self) -> Option<&PhasePoint> {
        self.points.last()
    }

    /// max |h(t) − h(0)| / max(1, |h(0)|).
    pub fn energy_drift(&self) -> f64 {
        let Some(&h0) = self.energies.first() else {
            return 0.0;
        };
        let h0 = if self.times[0] == 0.0 {
            h0
        } else {
            // Reversed backward orbit: the reference is the last sample.
            *self.energies.last().expect("non-empty")
        };
        let scale = h0.abs().max(1.0);
        self.energies
            .iter()
            .map(|h| (h - h0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Phase point at sample `i` in double-double, rebuilt from the
    /// reference point and the stored deviation from its free orbit.
    fn point_dd(&self, i: usize) -> (Dd, Vec<Dd>, Dd, Vec<Dd>) {
        let d = self.dimension();
        let dev = &self.deviations[i];
        let (x, y, eta, zeta) = free_flow_dd(&self.reference, self.times[i]);
        (
            x + dev[0],
            y.into_iter().zip(&dev[1..d]).map(|(a, b)| a + *b).collect(),
            eta + dev[d],
            zeta.into_iter()
                .zip(&dev[d + 1..])
                .map(|(a, b)| a + *b)
                .collect(),
        )
    }

    pub fn observables(&self, i: usize) -> Result<GammaObservables> {
        let (x, y, eta, zeta) = self.point_dd(i);
        gamma_observables_dd(x, &y, eta, &zeta)
    }

    fn push(&mut self, t: f64, dev: &[f64], spec: &PotentialSpec) -> Result<()> {
        let p0 = &self.reference;
        let d = p0.dimension();
        let free = free_flow(p0, t);
        let mut p = free.clone();
        p.x += dev[0];
        p.eta += dev[d];
        for k in 0..d - 1 {
            p.y[k] += dev[1 + k];
            p.zeta[k] += dev[d + 1 + k];
        }
        // h(p) = h₀(p₀) + P·Δp + ½|Δp|² − Δx + q, free of the t² cancellation.
        let dp = &dev[d..];
        let mut cross = free.eta * dp[0] + 0.5 * dp[0] * dp[0];
        for k in 0..d - 1 {
            cross += free.zeta[k] * dp[1 + k] + 0.5 * dp[1 + k] * dp[1 + k];
        }
        let energy = p0.free_energy() + cross - dev[0] + spec.eval(p.x, &p.y)?;
        self.times.push(t);
        self.points.push(p);
        self.energies.push(energy);
        self.deviations.push(dev.to_vec());
        Ok(())
    }

    fn reverse(&mut self) {
        self.times.reverse();
        self.points.reverse();
        self.energies.reverse();
        self.deviations.reverse();
    }
}

/// Which times an integration records.
#[derive(Clone, Debug)]
pub enum Record {
    /// Every accepted step.
    Steps,
    /// The given times (dense output), sorted in the direction of travel.
    Times(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    /// Local error tolerance per step.
    pub tol: f64,
    pub record: Record,
    pub max_steps: usize,
}

impl OrbitOptions {
    pub fn new(tol: f64) -> Self {
        OrbitOptions {
            tol,
            record: Record::Steps,
            max_steps: 2_000_000,
        }
    }
}

/// Runs the interaction-picture integration, calling `watch` with
/// (t, Δ) after every accepted step.
fn run_orbit<W>(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    t_final: f64,
    opts: &OrbitOptions,
    mut watch: W,
) -> Result<Trajectory>
where
    W: FnMut(f64, &[f64]) -> Control,
{
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!(
            "orbit tolerance {} must be positive",
            opts.tol
        )));
    }
    if !p0.is_finite() || !t_final.is_finite() {
        return Err(Error::domain("integrate_orbit", "non-finite initial data"));
    }
    let d = p0.dimension();
    let n = 2 * d;
    // Table profiles are only C², and derivative jumps at the knots escape
    // the embedded error estimate; a tighter internal tolerance compensates.
    let tol = match spec.kind {
        PotentialKind::Table => 1e-2 * opts.tol,
        _ => opts.tol,
    };
    let mut traj = Trajectory::new(p0.clone());
    let zero = vec![0.0; n];
    traj.push(0.0, &zero, spec)?;

    let mut pending: Vec<f64> = match &opts.record {
        Record::Steps => Vec::new(),
        Record::Times(ts) => ts
            .iter()
            .copied()
            .filter(|t| *t != 0.0 && t * t_final > 0.0 && t.abs() <= t_final.abs())
            .rev()
            .collect(),
    };
    let dense_mode = matches!(opts.record, Record::Times(_));

    let mut pos = vec![0.0; d - 1];
    let mut grad = vec![0.0; d];
    let rhs = |t: f64, s: &[f64], ds: &mut [f64]| -> Result<()> {
        let x = p0.x + t * p0.eta + 0.5 * t * t + s[0];
        for k in 0..d - 1 {
            pos[k] = p0.y[k] + t * p0.zeta[k] + s[1 + k];
        }
        spec.eval_with_grad(x, &pos, &mut grad)?;
        ds[..d].copy_from_slice(&s[d..]);
        for k in 0..d {
            ds[d + k] = -grad[k];
        }
        Ok(())
    };
    let scale = |i: usize, t: f64, s: &[f64]| -> f64 {
        if i < d {
            tol
        } else {
            let full = if i == d {
                p0.eta + t
            } else {
                p0.zeta[i - d - 1]
            } + s[i];
            tol / full.abs().max(1.0)
        }
    };
    let h_max = |t: f64| (0.1 * t.abs()).max(1.0);
    let mut record_err: Option<Error> = None;
    let mut buf = vec![0.0; n];
    let observer = |step: &Accepted| -> Control {
        if dense_mode {
            while let Some(&tp) = pending.last() {
                if (tp - step.t) * t_final.signum() > 0.0 {
                    break;
                }
                pending.pop();
                step.interpolate(tp, &mut buf);
                if let Err(e) = traj.push(tp, &buf, spec) {
                    record_err = Some(e);
                    return Control::Stop;
                }
            }
        } else if let Err(e) = traj.push(step.t, step.y, spec) {
            record_err = Some(e);
            return Control::Stop;
        }
        watch(step.t, step.y)
    };
    let ode_opts = OdeOptions {
        initial_step: 1e-2,
        max_steps: opts.max_steps,
    };
    let outcome = ode::solve(rhs, 0.0, &zero, t_final, &ode_opts, &scale, h_max, observer);
    if let Some(e) = record_err {
        let t = traj.times.last().copied().unwrap_or(0.0);
        return Err(Error::Integration {
            t,
            msg: e.to_string(),
            partial: Box::new(traj),
        });
    }
    if let Err(fail) = outcome {
        return Err(Error::Integration {
            t: fail.t,
            msg: fail.msg,
            partial: Box::new(traj),
        });
    }
    if t_final < 0.0 {
        traj.reverse();
    }
    Ok(traj)
}

/// Integrates Hamilton's equations from t = 0 to `t_final` (negative for
/// backward time).
pub fn integrate_orbit(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    t_final: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_orbit_with(spec, p0, t_final, &OrbitOptions::new(tol))
}

pub fn integrate_orbit_with(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    t_final: f64,
    opts: &OrbitOptions,
) -> Result<Trajectory> {
    run_orbit(spec, p0, t_final, opts, |_, _| Control::Continue)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MomentumOptions {
    pub tol: f64,
    /// First sampling time T₀; samples are at T₀·2^j.
    pub t_first: f64,
    pub doublings: usize,
}

impl Default for MomentumOptions {
    fn default() -> Self {
        MomentumOptions {
            tol: 1e-12,
            t_first: 100.0,
            doublings: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentumEstimate {
    pub value: Vec<f64>,
    pub error: f64,
    /// Estimated p in |ζ(T) − ζ±| ~ T^{−p}.
    pub rate: f64,
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

/// ζ± = lim ζ(t) as t → ±∞, extrapolated from dyadic samples.
pub fn asymptotic_momentum(
    spec: &PotentialSpec,
    p0: &PhasePoint,
    direction: Sign,
    opts: &MomentumOptions,
) -> Result<MomentumEstimate> {
    let s = direction.value();
    let times: Vec<f64> = (0..=opts.doublings)
        .map(|j| s * opts.t_first * 2f64.powi(j as i32))
        .collect();
    let t_max = *times.last().expect("at least one sample");
    let d = p0.dimension();
    let mut streak = 0usize;
    let mut prev_eta = f64::NEG_INFINITY;
    let mut escaped = false;
    let watch = |t: f64, dev: &[f64]| -> Control {
        let x = p0.x + t * p0.eta + 0.5 * t * t + dev[0];
        let eta = s * (p0.eta + t + dev[d]);
        if x > ESCAPE_X && eta > 0.0 && eta > prev_eta {
            streak += 1;
        } else {
            streak = 0;
        }
        prev_eta = eta;
        if streak >= ESCAPE_STEPS {
            escaped = true;
        }
        Control::Continue
    };
    let orbit_opts = OrbitOptions {
        tol: opts.tol,
        record: Record::Times(times.clone()),
        max_steps: 2_000_000,
    };
    let traj = run_orbit(spec, p0, t_max, &orbit_opts, watch)?;
    if !escaped {
        return Err(Error::budget(
            "classical",
            "asymptotic_momentum",
            format!("orbit did not escape before T_max = {}", t_max.abs()),
        ));
    }
    let mut samples: Vec<(f64, Vec<f64>)> = traj
        .times
        .iter()
        .zip(&traj.points)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, p)| (*t, p.zeta.clone()))
        .collect();
    samples.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let fallback = 2f64.powf(-2.0 * spec.delta);
    let extrapolate = |a: &[f64], b: &[f64], c: &[f64]| -> (Vec<f64>, f64, f64) {
        let d1 = diff_norm(b, a);
        let d2 = diff_norm(c, b);
        if d2 == 0.0 {
            return (c.to_vec(), 0.0, f64::INFINITY);
        }
        let mut rho = if d1 > 0.0 { d2 / d1 } else { fallback };
        if !(rho > 0.0 && rho < 0.9) {
            rho = fallback;
        }
        let w = rho / (1.0 - rho);
        let v: Vec<f64> = c.iter().zip(b).map(|(c, b)| c + (c - b) * w).collect();
        (v, d2 * w, -rho.log2())
    };
    let m = samples.len();
    if m < 3 {
        return Err(Error::insufficient(
            "asymptotic_momentum",
            "fewer than three dyadic samples",
        ));
    }
    let (value, corr, rate) = extrapolate(&samples[m - 3].1, &samples[m - 2].1, &samples[m - 1].1);
    let mut error = corr;
    if m >= 4 {
        let (prev, _, _) = extrapolate(&samples[m - 4].1, &samples[m - 3].1, &samples[m - 2].1);
        error = error.max(diff_norm(&value, &prev));
    }
    Ok(MomentumEstimate {
        value,
        error,
        rate,
        times: samples.iter().map(|s| s.0).collect(),
        samples: samples.into_iter().map(|s| s.1).collect(),
    })
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaObservables {
    /// γ = (η, ζ) − ∇θ₁.
    pub gamma: Vec<f64>,
    /// γ̃ = y/f².
    pub gamma_tilde: Vec<f64>,
    /// γ_∥ = (∇f/|∇f|²)·γ = f γ₁ + g·γ_y.
    pub gamma_par: f64,
    /// Euclidean norm of (γ, γ̃).
    pub gamma_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    GammaNorm,
    GammaPar,
}

impl GammaObservables {
    pub fn get(&self, which: Observable) -> f64 {
        match which {
            Observable::GammaNorm => self.gamma_norm,
            Observable::GammaPar => self.gamma_par,
        }
    }
}

fn check_observable_domain(x: f64, ny: f64) -> Result<()> {
    if !(x > THETA1_DOMAIN_C && ny / x < 1.0 / THETA1_DOMAIN_C) {
        return Err(Error::domain(
            "gamma_observables",
            format!("point (x = {x}, |y| = {ny}) outside x > 10, |y|/x < 0.1"),
        ));
    }
    Ok(())
}

pub fn gamma_observables(p: &PhasePoint) -> Result<GammaObservables> {
    let y: Vec<Dd> = p.y.iter().map(|v| Dd::new(*v)).collect();
    let zeta: Vec<Dd> = p.zeta.iter().map(|v| Dd::new(*v)).collect();
    gamma_observables_dd(Dd::new(p.x), &y, Dd::new(p.eta), &zeta)
}

fn gamma_observables_dd(x: Dd, y: &[Dd], eta: Dd, zeta: &[Dd]) -> Result<GammaObservables> {
    let ny2 = y.iter().fold(Dd::ZERO, |a, v| a + v.square());
    check_observable_domain(x.to_f64(), ny2.to_f64().sqrt())?;
    let g1 = grad_theta1_dd(x, y)?;
    let r = (x.square() + ny2).sqrt();
    let f2 = r + x;
    let f = f2.sqrt();
    let gamma0 = eta - g1[0];
    let mut par = f * gamma0;
    let mut gamma = vec![gamma0.to_f64()];
    let mut tilde = Vec::with_capacity(y.len());
    let mut norm2 = gamma0.square();
    for k in 0..y.len() {
        let gk = zeta[k] - g1[k + 1];
        par = par + y[k] / f * gk;
        let tk = y[k] / f2;
        norm2 = norm2 + gk.square() + tk.square();
        gamma.push(gk.to_f64());
        tilde.push(tk.to_f64());
    }
    Ok(GammaObservables {
        gamma,
        gamma_tilde: tilde,
        gamma_par: par.to_f64(),
        gamma_norm: norm2.sqrt().to_f64(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// 95% confidence half-width.
    pub half_width: f64,
    pub samples: usize,
}

/// Least-squares slope of log|observable| against log|t| over the
/// trajectory samples nearest to t_lo·2^{j/4} inside the window.
pub fn decay_slope(
    traj: &Trajectory,
    observable: Observable,
    window: (f64, f64),
) -> Result<SlopeFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("invalid window [{lo}, {hi}]")));
    }
    let abs_times: Vec<f64> = traj.times.iter().map(|t| t.abs()).collect();
    let (tmin, tmax) = abs_times
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), t| (a.min(*t), b.max(*t)));
    if tmin > lo * (1.0 + 1e-9) || tmax < hi * (1.0 - 1e-9) {
        return Err(Error::insufficient(
            "decay_slope",
            format!("trajectory covers [{tmin}, {tmax}], window is [{lo}, {hi}]"),
        ));
    }
    let mut picked: Vec<usize> = Vec::new();
    let mut j = 0;
    loop {
        let target = lo * 2f64.powf(j as f64 / 4.0);
        if target > hi * (1.0 + 1e-12) {
            break;
        }
        let idx = (0..abs_times.len())
            .min_by(|&a, &b| {
                (abs_times[a].ln() - target.ln())
                    .abs()
                    .total_cmp(&(abs_times[b].ln() - target.ln()).abs())
            })
            .expect("non-empty trajectory");
        if picked.last() != Some(&idx) && !picked.contains(&idx) {
            picked.push(idx);
        }
        j += 1;
    }
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for i in picked {
        let v = traj.observables(i)?.get(observable);
        if v.abs() > ZERO_FLOOR {
            ts.push(abs_times[i]);
            vs.push(v);
        }
    }
    if ts.len() < 8 {
        return Err(Error::insufficient(
            "decay_slope",
            format!("{} usable samples, need at least 8", ts.len()),
        ));
    }
    let lf = fit::power_law(&ts, &vs)?;
    Ok(SlopeFit {
        slope: lf.slope,
        half_width: Z95 * lf.slope_se,
        samples: lf.n,
    })
}

/// ⟨y⟩_m = (m² + |y|²)^{1/2}.
pub fn japanese_bracket(y: &[f64], m: f64) -> f64 {
    (m * m + norm2(y)).sqrt()
}

/// a = (η + ŷ_m·ζ)/√(2x + 2⟨y⟩_m), or None where x + ⟨y⟩_m ≤ 0.
pub fn region_a(p: &PhasePoint, m: f64) -> Option<f64> {
    let br = japanese_bracket(&p.y, m);
    if !(p.x + br > 0.0) {
        return None;
    }
    let radial: f64 = p.y.iter().zip(&p.zeta).map(|(y, z)| y * z).sum::<f64>() / br;
    Some((p.eta + radial) / (2.0 * p.x + 2.0 * br).sqrt())
}

/// Membership in X±_ε = {x + ⟨y⟩_m > 0, ±(η + ŷ_m·ζ) > −ε√(2x + 2⟨y⟩_m)}.
pub fn in_region_x(p: &PhasePoint, m: f64, eps: f64, sign: Sign) -> bool {
    let br = japanese_bracket(&p.y, m);
    if !(p.x + br > 0.0) {
        return false;
    }
    let radial: f64 = p.y.iter().zip(&p.zeta).map(|(y, z)| y * z).sum::<f64>() / br;
    sign.value() * (p.eta + radial) > -eps * (2.0 * p.x + 2.0 * br).sqrt()
}
