//! Invariant suites run by `verify-all`. Every suite is seeded, evaluates
//! its samples in parallel but reduces them in sample order, so a fixed
//! seed reproduces the reports bit for bit.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    asymptotic_momentum, decay_slope, free_flow, in_region_x, integrate_orbit_with,
    MomentumOptions, Observable, OrbitOptions, PhasePoint, Record, Sign,
};
use crate::error::{Error, Result};
use crate::kernel::{
    born_symbol, kernel_fft_check, kernel_singularity_law, FftCheckOptions, SymbolGrid,
};
use crate::oscillatory::{asymptotic_convergence, XiProfile};
use crate::parabolic::{
    eikonal_residual, grad_f, grad_g, jacobian_det, theta_calculus, to_parabolic,
};
use crate::potentials::PotentialSpec;
use crate::quadrature::{adaptive, AdaptiveOptions};
use crate::special::{c1_constant, c2_constant, c2_constant_via_c1};
use crate::transport::{
    decay_fit_symbols, symbol_b, symbol_q, transport_residual, Ray, TransportConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Suite ids to run; empty means all.
    pub suites: Vec<usize>,
    pub eikonal_points: usize,
    pub parabolic_points: usize,
    pub orbits: usize,
    pub region_points: usize,
    /// Region parameters (m, ε).
    pub region_m: f64,
    pub region_eps: f64,
    pub transport_points: usize,
    pub kernel_n: usize,
    pub kernel_spacing: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            suites: Vec::new(),
            eikonal_points: 10_000,
            parabolic_points: 10_000,
            orbits: 20,
            region_points: 10_000,
            region_m: 1.0,
            region_eps: 0.3,
            transport_points: 10,
            kernel_n: 2048,
            kernel_spacing: 100.0,
        }
    }
}

impl VerifySettings {
    pub fn validate(&self) -> Result<()> {
        if let Some(id) = self
            .suites
            .iter()
            .find(|id| !SUITES.iter().any(|s| s.0 == **id))
        {
            return Err(Error::Config(format!("unknown suite id {id}")));
        }
        let counts = [
            self.eikonal_points,
            self.parabolic_points,
            self.orbits,
            self.region_points,
            self.transport_points,
        ];
        if counts.contains(&0) {
            return Err(Error::Config("suite sample counts must be positive".into()));
        }
        if !(self.region_m > 0.0 && self.region_eps > 0.0 && self.region_eps < 1.0) {
            return Err(Error::Config("region needs m > 0 and 0 < eps < 1".into()));
        }
        SymbolGrid::check_shape(self.kernel_n, self.kernel_spacing, 2)
    }

    pub fn selected(&self) -> Vec<usize> {
        if self.suites.is_empty() {
            SUITES.iter().map(|s| s.0).collect()
        } else {
            self.suites.clone()
        }
    }
}

/// (id, name) of every suite, in run order.
pub const SUITES: [(usize, &str); 9] = [
    (1, "eikonal"),
    (2, "parabolic"),
    (3, "constants"),
    (4, "classical_decay"),
    (5, "region_invariance"),
    (6, "transport"),
    (7, "stationary_phase"),
    (8, "kernel"),
    (9, "free_case"),
];

/// One quantitative check: `value` must lie in [lo, hi].
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, value: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let passed =
            value.is_finite() && lo.map_or(true, |l| value >= l) && hi.map_or(true, |h| value <= h);
        Check {
            name: name.to_string(),
            value,
            lo,
            hi,
            passed,
        }
    }

    pub fn at_most(name: &str, value: f64, hi: f64) -> Self {
        Check::new(name, value, None, Some(hi))
    }

    pub fn within(name: &str, value: f64, center: f64, tol: f64) -> Self {
        Check::new(name, value, Some(center - tol), Some(center + tol))
    }
}

/// Rows of per-sample data written next to the summary.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub table: Table,
}

impl SuiteReport {
    fn new(id: usize, checks: Vec<Check>, table: Table) -> Self {
        let name = SUITES.iter().find(|s| s.0 == id).expect("known suite").1;
        SuiteReport {
            id,
            name,
            passed: checks.iter().all(|c| c.passed),
            checks,
            table,
        }
    }
}

fn suite_rng(seed: u64, id: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(id as u64),
    )
}

/// Runs suite `id` in dimension `d` (suites tied to a dimension ignore it).
pub fn run_suite(id: usize, settings: &VerifySettings, seed: u64, d: usize) -> Result<SuiteReport> {
    if d < 2 {
        return Err(Error::Config(format!("dimension {d} < 2")));
    }
    let mut rng = suite_rng(seed, id);
    match id {
        1 => eikonal_suite(settings, &mut rng),
        2 => parabolic_suite(settings, &mut rng),
        3 => constants_suite(&mut rng),
        4 => classical_decay_suite(settings, &mut rng, d),
        5 => region_suite(settings, &mut rng, d),
        6 => transport_suite(settings, &mut rng, d),
        7 => stationary_phase_suite(),
        8 => kernel_suite(settings),
        9 => free_case_suite(&mut rng, d),
        _ => Err(Error::Config(format!("unknown suite id {id}"))),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

/// x log-uniform in [10, 1e6], |y| ≤ x/10; dimensions alternate 2, 3.
fn eikonal_suite(s: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let points: Vec<(f64, Vec<f64>)> = (0..s.eikonal_points)
        .map(|i| {
            let x = 10f64.powf(rng.gen_range(1.0..6.0));
            let m = 1 + i % 2;
            loop {
                let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.1..0.1) * x).collect();
                if norm(&y) <= 0.1 * x {
                    break (x, y);
                }
            }
        })
        .collect();
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|(x, y)| eikonal_residual(*x, y).map(f64::abs))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["x", "abs_y", "residual"]);
    for ((x, y), r) in points.iter().zip(&residuals) {
        table.rows.push(vec![*x, norm(y), *r]);
    }
    let worst = max_of(residuals.iter().copied());
    Ok(SuiteReport::new(
        1,
        vec![Check::at_most("max_residual", worst, 1e-10)],
        table,
    ))
}

/// Direction uniform on the sphere, r log-uniform in [3, 1e5], r + x ≥ 3.
fn identity_regime_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&dir);
        if !(0.1..=1.0).contains(&n) {
            continue;
        }
        let r = 10f64.powf(rng.gen_range(0.5..5.0));
        let p: Vec<f64> = dir.iter().map(|v| v * r / n).collect();
        if r + p[0] >= 3.0 {
            return p;
        }
    }
}

fn det(m: &[Vec<f64>]) -> f64 {
    if m.len() == 2 {
        return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    }
    // Laplace expansion along the first row.
    (0..m.len())
        .map(|c| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != c)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][c] * det(&minor)
        })
        .sum()
}

/// |det| of the fourth-order finite-difference Jacobian of (x, y) ↦ (f, g).
fn fd_jacobian(p: &[f64]) -> f64 {
    let d = p.len();
    let r = norm(p);
    let u = r + p[0];
    // Matched to the local scale of the map; keeps the stencil in r + x > 2.
    let h = (1e-3 * (r * u).sqrt()).min(0.1 * u);
    let map = |q: &[f64]| {
        let pp = to_parabolic(q[0], &q[1..]);
        std::iter::once(pp.f).chain(pp.g).collect::<Vec<f64>>()
    };
    let mut m = vec![vec![0.0; d]; d];
    for k in 0..d {
        let at = |s: f64| {
            let mut q = p.to_vec();
            q[k] += s * h;
            map(&q)
        };
        let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
        for c in 0..d {
            m[c][k] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
        }
    }
    det(&m).abs()
}

fn parabolic_suite(s: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let points: Vec<Vec<f64>> = (0..s.parabolic_points)
        .map(|i| identity_regime_point(rng, 2 + i % 2))
        .collect();
    // Per point: the five identity residuals (relative) and the J error.
    let rows: Vec<[f64; 6]> = points
        .par_iter()
        .map(|p| -> Result<[f64; 6]> {
            let d = p.len();
            let (x, y) = (p[0], &p[1..]);
            let q = to_parabolic(x, y);
            let (f, r) = (q.f, q.r);
            let g2: f64 = q.g.iter().map(|v| v * v).sum();
            let sum = (f * f + g2 - 2.0 * r).abs() / (2.0 * r);
            let diff = (f * f - g2 - 2.0 * x).abs() / (2.0 * r);
            let gf = grad_f(x, y);
            let unit = (2.0 * r * gf.iter().map(|v| v * v).sum::<f64>() - 1.0).abs();
            let orth = max_of(grad_g(x, y).iter().map(|row| {
                let dot: f64 = gf.iter().zip(row).map(|(a, b)| a * b).sum();
                dot.abs() / (norm(&gf) * norm(row))
            }));
            let t = theta_calculus(x, y, d)?;
            let want = 0.5 * d as f64 * f / r;
            let trace: f64 = (0..d).map(|k| t.hessian[k][k]).sum();
            let lap = (trace - want).abs() / want;
            let j = jacobian_det(x, y, d)?;
            let jac = (fd_jacobian(p) / j - 1.0).abs();
            Ok([sum, diff, unit, orth, lap, jac])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "d",
        "x",
        "abs_y",
        "sum_identity",
        "difference_identity",
        "unit_gradient",
        "orthogonality",
        "laplacian",
        "jacobian_rel_error",
    ]);
    for (p, row) in points.iter().zip(&rows) {
        let mut out = vec![p.len() as f64, p[0], norm(&p[1..])];
        out.extend_from_slice(row);
        table.rows.push(out);
    }
    let col = |k: usize| max_of(rows.iter().map(|r| r[k]));
    let checks = vec![
        Check::at_most("f2_plus_g2_eq_2r", col(0), 1e-10),
        Check::at_most("f2_minus_g2_eq_2x", col(1), 1e-10),
        Check::at_most("two_r_grad_f_sq_eq_1", col(2), 1e-10),
        Check::at_most("grad_f_dot_grad_g", col(3), 1e-10),
        Check::at_most("laplacian_theta", col(4), 1e-10),
        Check::at_most("jacobian_vs_finite_differences", col(5), 1e-6),
    ];
    Ok(SuiteReport::new(2, checks, table))
}

/// 2^{−3/2} ∫₀^∞ (t + 1)^{−α/2} t^{−3/4} dt, split at t = 1 with t = s⁴
/// on the head and s = 1/w on the tail.
fn c1_by_quadrature(alpha: f64) -> Result<f64> {
    let opts = AdaptiveOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-14,
        max_intervals: 20_000,
    };
    let head = adaptive(
        |s: f64| 4.0 * (s.powi(4) + 1.0).powf(-alpha / 2.0),
        0.0,
        1.0,
        &opts,
    );
    let tail = adaptive(
        |w: f64| 4.0 * w.powf(2.0 * alpha - 2.0) * (1.0 + w.powi(4)).powf(-alpha / 2.0),
        0.0,
        1.0,
        &opts,
    );
    if !(head.converged && tail.converged) {
        return Err(Error::budget(
            "verify",
            "c1_by_quadrature",
            "interval budget of 20000",
        ));
    }
    Ok(2f64.powf(-1.5) * (head.value + tail.value))
}

fn constants_suite(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut table = Table::new(&["kind", "d", "alpha", "value", "reference", "rel_error"]);
    let mut c1_err = 0.0f64;
    for alpha in [0.8, 1.0, 1.5, 2.0, 3.0] {
        let (got, want) = (c1_constant(alpha)?, c1_by_quadrature(alpha)?);
        let e = (got / want - 1.0).abs();
        c1_err = c1_err.max(e);
        table.rows.push(vec![1.0, 0.0, alpha, got, want, e]);
    }
    let c2 = c2_constant(3, 1.0)?;
    let c2_err = (c2 - Complex64::new(0.0, -(2.0 * PI).powf(-0.5))).norm();
    table
        .rows
        .push(vec![2.0, 3.0, 1.0, c2.im, -(2.0 * PI).powf(-0.5), c2_err]);
    let mut forms_err = 0.0f64;
    for _ in 0..20 {
        let d = rng.gen_range(2..=6usize);
        let alpha = rng.gen_range(0.52..(d as f64 - 0.52));
        let (a, b) = (c2_constant(d, alpha)?, c2_constant_via_c1(d, alpha)?);
        let e = (a - b).norm() / a.norm().max(1.0);
        forms_err = forms_err.max(e);
        table.rows.push(vec![3.0, d as f64, alpha, a.im, b.im, e]);
    }
    let checks = vec![
        Check::at_most("c1_vs_quadrature", c1_err, 1e-8),
        Check::at_most("c2_coulomb_3d", c2_err, 1e-12),
        Check::at_most("c2_forms_agree", forms_err, 1e-12),
    ];
    Ok(SuiteReport::new(3, checks, table))
}

fn log_times(lo: f64, hi: f64, per_octave: usize) -> Vec<f64> {
    let n = ((hi / lo).log2() * per_octave as f64).ceil() as usize;
    (0..=n)
        .map(|j| lo * 2f64.powf(j as f64 / per_octave as f64))
        .collect()
}

/// Coulomb κ = 0.1 with the default softening; zero-energy orbits started
/// at x ∈ [20, 50] heading out.
fn classical_decay_suite(
    s: &VerifySettings,
    rng: &mut ChaCha8Rng,
    d: usize,
) -> Result<SuiteReport> {
    let spec = PotentialSpec::coulomb(0.1);
    let mut starts = Vec::with_capacity(s.orbits);
    for _ in 0..s.orbits {
        let x0: f64 = rng.gen_range(20.0..50.0);
        let y0: Vec<f64> = (1..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let z0: Vec<f64> = (1..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let q = spec.eval(x0, &y0)?;
        let eta = (2.0 * (x0 - q) - z0.iter().map(|z| z * z).sum::<f64>()).sqrt();
        starts.push(PhasePoint::new(x0, y0, eta, z0));
    }
    let opts = OrbitOptions {
        tol: 1e-14,
        record: Record::Times(log_times(50.0, 2e4, 8)),
        max_steps: 1_000_000,
    };
    let slopes: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|p0| {
            let traj = integrate_orbit_with(&spec, p0, 2e4, &opts)?;
            let g = decay_slope(&traj, Observable::GammaNorm, (100.0, 1e4))?.slope;
            let par = decay_slope(&traj, Observable::GammaPar, (100.0, 1e4))?.slope;
            Ok((g, par))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["orbit", "x0", "eta0", "gamma_slope", "gamma_par_slope"]);
    for (i, (p0, (g, par))) in starts.iter().zip(&slopes).enumerate() {
        table.rows.push(vec![i as f64, p0.x, p0.eta, *g, *par]);
    }
    let n = slopes.len() as f64;
    let mean_g = slopes.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_p = slopes.iter().map(|s| s.1).sum::<f64>() / n;
    let checks = vec![
        Check::at_most("mean_gamma_slope", mean_g, -0.9),
        Check::at_most("mean_gamma_par_slope", mean_p, -1.8),
    ];
    Ok(SuiteReport::new(4, checks, table))
}

fn region_suite(s: &VerifySettings, rng: &mut ChaCha8Rng, d: usize) -> Result<SuiteReport> {
    let (m, eps) = (s.region_m, s.region_eps);
    let mut points = Vec::with_capacity(s.region_points);
    while points.len() < s.region_points {
        let p = PhasePoint::new(
            rng.gen_range(-50.0..50.0),
            (1..d).map(|_| rng.gen_range(-50.0..50.0)).collect(),
            rng.gen_range(-20.0..20.0),
            (1..d).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        );
        if in_region_x(&p, m, eps, Sign::Plus) {
            points.push(p);
        }
    }
    let times = [1.0, 10.0, 100.0];
    let violations: Vec<usize> = times
        .iter()
        .map(|&t| {
            points
                .par_iter()
                .filter(|p| !in_region_x(&free_flow(p, t), m, eps, Sign::Plus))
                .count()
        })
        .collect();
    let mut table = Table::new(&["t", "points", "violations"]);
    for (t, v) in times.iter().zip(&violations) {
        table.rows.push(vec![*t, points.len() as f64, *v as f64]);
    }
    let total = violations.iter().sum::<usize>() as f64;
    Ok(SuiteReport::new(
        5,
        vec![Check::at_most("violations", total, 0.0)],
        table,
    ))
}

fn transport_suite(s: &VerifySettings, rng: &mut ChaCha8Rng, d: usize) -> Result<SuiteReport> {
    let spec = PotentialSpec::coulomb(1.0);
    let cfg = TransportConfig::default();
    let points: Vec<PhasePoint> = (0..s.transport_points)
        .map(|_| {
            let x: f64 = rng.gen_range(50.0..500.0);
            let mut y = vec![0.0; d - 1];
            y[0] = rng.gen_range(-0.1..0.1) * x;
            let eta = rng.gen_range(0.5..1.5) * (2.0 * x).sqrt();
            PhasePoint::new(
                x,
                y,
                eta,
                (1..d).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            )
        })
        .collect();
    let steps = [1.0, 0.5, 0.25];
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| [(i, 1), (i, 2)]).collect();
    let residuals: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(i, k)| {
            steps
                .iter()
                .map(|&h| transport_residual(k, &points[i], &spec, Sign::Plus, &cfg, h))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "point",
        "k",
        "x",
        "residual_h1",
        "residual_h2",
        "residual_h4",
        "order_1",
        "order_2",
    ]);
    let mut worst = 0.0f64;
    for (&(i, k), r) in jobs.iter().zip(&residuals) {
        let o1 = (r[0] / r[1]).log2();
        let o2 = (r[1] / r[2]).log2();
        worst = worst.max((o1 - 2.0).abs()).max((o2 - 2.0).abs());
        table.rows.push(vec![
            i as f64,
            k as f64,
            points[i].x,
            r[0],
            r[1],
            r[2],
            o1,
            o2,
        ]);
    }
    let mut zeta = vec![0.0; d - 1];
    zeta[0] = 0.1;
    let ray = Ray {
        slope: 0.02,
        zeta,
        xs: (0..9).map(|j| 100.0 * 10f64.powf(j as f64 / 4.0)).collect(),
    };
    let decay = decay_fit_symbols(1, &spec, Sign::Plus, &ray, &cfg)?;
    let checks = vec![
        Check::at_most("max_order_deviation_from_2", worst, 0.2),
        Check::within("b1_decay_exponent", decay.b_slope, -0.5, 0.1),
        Check::within("q1_decay_exponent", decay.q_slope, -1.5, 0.1),
    ];
    Ok(SuiteReport::new(6, checks, table))
}

/// Profile supported on ζ ∈ [−0.15, 9.15]: at y/x = 0.05 only the critical
/// point ω = y/√(2x) meets the support and the far one at ζ ≈ √(2x) stays
/// outside it for x ≥ 50.
pub fn one_sided_profile() -> XiProfile {
    XiProfile::bump(vec![4.5], 4.65)
}

fn stationary_phase_suite() -> Result<SuiteReport> {
    let xs = [50.0, 100.0, 200.0, 400.0, 800.0];
    let fit = asymptotic_convergence(0.05, &xs, &one_sided_profile(), 0.0, 1e-9)?;
    let mut table = Table::new(&[
        "x",
        "y",
        "exact_re",
        "exact_im",
        "asymptotic_re",
        "asymptotic_im",
        "rel_error",
    ]);
    for s in &fit.samples {
        table.rows.push(vec![
            s.x,
            s.y[0],
            s.exact.re,
            s.exact.im,
            s.asymptotic.re,
            s.asymptotic.im,
            s.rel_error,
        ]);
    }
    let last = fit.samples.last().map_or(f64::NAN, |s| s.rel_error);
    let checks = vec![
        Check::at_most("rel_error_at_x800", last, 0.01),
        Check::at_most("convergence_exponent", fit.exponent(), -0.5),
    ];
    Ok(SuiteReport::new(7, checks, table))
}

fn kernel_suite(s: &VerifySettings) -> Result<SuiteReport> {
    let law = kernel_singularity_law(3, 1.0, 1.0)?;
    let grid = SymbolGrid::born(
        &PotentialSpec::coulomb(1.0),
        vec![0.0, 0.0],
        0.0,
        s.kernel_n,
        s.kernel_spacing,
        None,
        1e-10,
    )?;
    let fit = kernel_fft_check(&grid, &law, &FftCheckOptions::default())?;
    let mut table = Table::new(&["k", "modulus", "fitted", "residual", "count"]);
    for b in &fit.bins {
        table
            .rows
            .push(vec![b.k, b.modulus, b.fitted, b.residual, b.count as f64]);
    }
    let target = (2.0 * PI).powf(-0.5);
    let checks = vec![
        Check::within("exponent", fit.exponent, -1.5, 0.1),
        Check::at_most(
            "prefactor_rel_error",
            (fit.prefactor_modulus / target - 1.0).abs(),
            0.1,
        ),
    ];
    Ok(SuiteReport::new(8, checks, table))
}

fn free_case_suite(rng: &mut ChaCha8Rng, d: usize) -> Result<SuiteReport> {
    let zero = PotentialSpec::zero();
    let cfg = TransportConfig::default();
    let mut table = Table::new(&[
        "sample",
        "max_abs_b",
        "max_abs_q",
        "abs_t",
        "momentum_change",
    ]);
    let (mut b_max, mut q_max, mut t_max, mut dz_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..20 {
        let x: f64 = rng.gen_range(50.0..500.0);
        let y: Vec<f64> = (1..d).map(|_| rng.gen_range(-0.1..0.1) * x).collect();
        let zeta: Vec<f64> = (1..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = PhasePoint::new(x, y.clone(), (2.0 * x).sqrt(), zeta.clone());
        let mut b = 0.0f64;
        let mut q = 0.0f64;
        for (p, sign) in [(out.clone(), Sign::Plus), (out.reflected(), Sign::Minus)] {
            for k in 1..=2 {
                b = b.max(symbol_b(k, &p, &zero, sign, &cfg)?.value.norm());
                q = q.max(symbol_q(k, &p, &zero, sign, &cfg, None)?.value().norm());
            }
        }
        let lambda = rng.gen_range(-1.0..1.0);
        let t = born_symbol(&zero, &zeta, &y, lambda, None, 1e-10)?.norm();
        let start = PhasePoint::new(
            rng.gen_range(5.0..20.0),
            (1..d).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            rng.gen_range(-2.0..2.0),
            zeta.clone(),
        );
        let mut dz = 0.0f64;
        for sign in [Sign::Plus, Sign::Minus] {
            let m = asymptotic_momentum(&zero, &start, sign, &MomentumOptions::default())?;
            dz = dz.max(max_of(
                m.value.iter().zip(&zeta).map(|(a, b)| (a - b).abs()),
            ));
        }
        table.rows.push(vec![i as f64, b, q, t, dz]);
        b_max = b_max.max(b);
        q_max = q_max.max(q);
        t_max = t_max.max(t);
        dz_max = dz_max.max(dz);
    }
    let checks = vec![
        Check::at_most("max_abs_b_k", b_max, 0.0),
        Check::at_most("max_abs_q_k", q_max, 0.0),
        Check::at_most("max_abs_born_symbol", t_max, 0.0),
        Check::at_most("max_momentum_change", dz_max, 0.0),
    ];
    Ok(SuiteReport::new(9, checks, table))
}
