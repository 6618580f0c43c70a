use rayon::prelude::*;
use serde_json::{json, Value};
use stark_core::classical::{
    asymptotic_momentum, free_flow, integrate_orbit_with, MomentumOptions, OrbitOptions,
    PhasePoint, Record, Trajectory,
};
use stark_core::fit;
use stark_core::kernel::{
    born_symbol, homogeneous_symbol_asymptote, kernel_fft_check, kernel_singularity_law, SymbolGrid,
};
use stark_core::oscillatory::{asymptotic_convergence, XiProfile};
use stark_core::parabolic::{eikonal_residual, jacobian_det, theta_calculus};
use stark_core::potentials::{PotentialKind, PotentialSpec};
use stark_core::transport::{symbol_b, symbol_q, transport_residual, Ray};
use stark_core::verify::run_suite;
use stark_core::Error;

use crate::config::{padded, InitialPoint, RunConfig};
use crate::output::{indexed, Artifacts};
use crate::CliError;

/// Summary fields and whether every check of the command passed.
pub struct Outcome {
    pub summary: Value,
    pub passed: bool,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Outcome {
            summary,
            passed: true,
        }
    }
}

fn initial_point(p: &InitialPoint, d: usize) -> Result<PhasePoint, CliError> {
    Ok(PhasePoint::new(
        p.x,
        padded("initial.y", &p.y, d - 1)?,
        p.eta,
        padded("initial.zeta", &p.zeta, d - 1)?,
    ))
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(CliError::Config(format!(
            "bad log range [{lo}, {hi}] with {n} points"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect())
}

fn e1(v: f64, m: usize) -> Vec<f64> {
    let mut y = vec![0.0; m];
    y[0] = v;
    y
}

fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    let p0 = traj.initial();
    traj.times
        .iter()
        .zip(&traj.points)
        .zip(&traj.energies)
        .map(|((&t, p), &h)| {
            let free = free_flow(p0, t);
            let dev = std::iter::once(p.x - free.x)
                .chain(p.y.iter().zip(&free.y).map(|(a, b)| a - b))
                .chain(std::iter::once(p.eta - free.eta))
                .chain(p.zeta.iter().zip(&free.zeta).map(|(a, b)| a - b))
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let mut row = vec![t, p.x];
            row.extend(&p.y);
            row.push(p.eta);
            row.extend(&p.zeta);
            row.extend([h, dev]);
            row
        })
        .collect()
}

pub fn orbit(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let d = cfg.dimension;
    let sec = &cfg.orbit;
    let p0 = initial_point(&sec.initial, d)?;
    if sec.samples < 2 {
        return Err(CliError::Config("orbit.samples must be at least 2".into()));
    }
    let times: Vec<f64> = (0..sec.samples)
        .map(|i| sec.t_final * i as f64 / (sec.samples - 1) as f64)
        .collect();
    let opts = OrbitOptions {
        tol: sec.tol,
        record: Record::Times(times),
        max_steps: 2_000_000,
    };
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend(indexed("y", d - 1));
    header.push("eta".into());
    header.extend(indexed("zeta", d - 1));
    header.extend(["energy".to_string(), "free_flow_deviation".to_string()]);
    let traj = match integrate_orbit_with(&cfg.potential, &p0, sec.t_final, &opts) {
        Ok(t) => t,
        Err(Error::Integration { t, msg, partial }) => {
            // Keep what was computed before the failure.
            out.csv("orbit.csv", &header, &trajectory_rows(&partial))?;
            return Err(Error::Integration { t, msg, partial }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let rows = trajectory_rows(&traj);
    out.csv("orbit.csv", &header, &rows)?;
    let last = traj.last().expect("the initial point is always recorded");
    let max_dev = rows.iter().map(|r| r[r.len() - 1]).fold(0.0, f64::max);
    Ok(Outcome::ok(json!({
        "samples": rows.len(),
        "energy_drift": traj.energy_drift(),
        "max_free_flow_deviation": max_dev,
        "final": last,
    })))
}

pub fn momenta(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let d = cfg.dimension;
    let sec = &cfg.momenta;
    let p0 = initial_point(&sec.initial, d)?;
    let opts = MomentumOptions {
        tol: sec.tol,
        t_first: sec.t_first,
        doublings: sec.doublings,
    };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for &sign in &sec.directions {
        let m = asymptotic_momentum(&cfg.potential, &p0, sign, &opts)?;
        for (t, z) in m.times.iter().zip(&m.samples) {
            let mut row = vec![sign.value(), *t];
            row.extend(z);
            rows.push(row);
        }
        results.push(json!({
            "direction": sign,
            "value": m.value,
            "error": m.error,
            "rate": m.rate,
        }));
    }
    let mut header = vec!["direction".to_string(), "t".to_string()];
    header.extend(indexed("zeta", d - 1));
    out.csv("momenta.csv", &header, &rows)?;
    Ok(Outcome::ok(json!({ "initial": p0, "momenta": results })))
}

pub fn eikonal(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let d = cfg.dimension;
    let sec = &cfg.eikonal;
    if !(sec.max_ratio >= 0.0 && sec.max_ratio < 1.0) || sec.ny == 0 {
        return Err(CliError::Config(
            "eikonal needs 0 ≤ max_ratio < 1 and ny ≥ 1".into(),
        ));
    }
    let xs = log_spaced(sec.x_min, sec.x_max, sec.nx)?;
    let points: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| {
            (0..sec.ny).map(move |j| {
                let s = if sec.ny == 1 {
                    0.0
                } else {
                    -1.0 + 2.0 * j as f64 / (sec.ny - 1) as f64
                };
                (x, s * sec.max_ratio * x)
            })
        })
        .collect();
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|&(x, y1)| {
            let y = e1(y1, d - 1);
            let res = eikonal_residual(x, &y)?;
            let j = jacobian_det(x, &y, d)?;
            let lap = theta_calculus(x, &y, d)?.laplacian;
            Ok(vec![x, y1, res, j, lap])
        })
        .collect::<Result<_, Error>>()?;
    let header: Vec<String> = ["x", "y", "eikonal_residual", "jacobian", "laplacian_theta"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.csv("eikonal.csv", &header, &rows)?;
    let worst = rows.iter().map(|r| r[2].abs()).fold(0.0, f64::max);
    Ok(Outcome::ok(
        json!({ "points": rows.len(), "max_abs_residual": worst }),
    ))
}

pub fn transport(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let d = cfg.dimension;
    let sec = &cfg.transport;
    let ray = Ray {
        slope: sec.slope,
        zeta: padded("transport.zeta", &sec.zeta, d - 1)?,
        xs: sec.xs.clone(),
    };
    let spec = &cfg.potential;
    let rows: Vec<Vec<f64>> = ray
        .points()
        .par_iter()
        .map(|p| {
            let b = symbol_b(sec.k, p, spec, sec.sign, &sec.symbols)?;
            let q = symbol_q(sec.k, p, spec, sec.sign, &sec.symbols, None)?.value();
            let r = transport_residual(sec.k, p, spec, sec.sign, &sec.symbols, sec.residual_step)?;
            Ok(vec![
                p.x, p.y[0], b.value.re, b.value.im, b.error, q.re, q.im, r,
            ])
        })
        .collect::<Result<_, Error>>()?;
    let header: Vec<String> = [
        "x", "y_1", "b_re", "b_im", "b_error", "q_re", "q_im", "residual",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    out.csv("transport.csv", &header, &rows)?;
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let bs: Vec<f64> = rows.iter().map(|r| r[2].hypot(r[3])).collect();
    let qs: Vec<f64> = rows.iter().map(|r| r[5].hypot(r[6])).collect();
    let slope = |vs: &[f64]| fit::power_law(&xs, vs).ok().map(|f| f.slope);
    Ok(Outcome::ok(json!({
        "k": sec.k,
        "sign": sec.sign,
        "points": rows.len(),
        "b_decay_exponent": slope(&bs),
        "q_decay_exponent": slope(&qs),
        "max_residual": rows.iter().map(|r| r[7]).fold(0.0, f64::max),
    })))
}

/// Homogeneity exponent of power-law kinds.
fn power_alpha(spec: &PotentialSpec) -> Option<f64> {
    match spec.kind {
        PotentialKind::Coulomb => Some(1.0),
        PotentialKind::Homogeneous => Some(spec.alpha),
        _ => None,
    }
}

pub fn born(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let m = cfg.dimension - 1;
    let sec = &cfg.born;
    let zeta = padded("born.zeta", &sec.zeta, m)?;
    let rhos = log_spaced(sec.rho_min, sec.rho_max, sec.n)?;
    let spec = &cfg.potential;
    let rows: Vec<Vec<f64>> = rhos
        .par_iter()
        .map(|&rho| {
            let y = e1(rho, m);
            let t = born_symbol(spec, &zeta, &y, sec.lambda, sec.cutoff, sec.tol)?;
            let asym = match power_alpha(spec) {
                Some(a) if !spec.is_zero() => homogeneous_symbol_asymptote(spec.kappa, a, &y)?.im,
                _ => f64::NAN,
            };
            Ok(vec![rho, t.re, t.im, asym])
        })
        .collect::<Result<_, Error>>()?;
    let header: Vec<String> = ["abs_y", "t_re", "t_im", "asymptote_im"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.csv("born.csv", &header, &rows)?;
    // Decay over the upper half of the |y| range.
    let half = &rows[rows.len() / 2..];
    let slope = fit::power_law(
        &half.iter().map(|r| r[0]).collect::<Vec<_>>(),
        &half.iter().map(|r| r[1].hypot(r[2])).collect::<Vec<_>>(),
    )
    .ok()
    .map(|f| f.slope);
    Ok(Outcome::ok(json!({
        "points": rows.len(),
        "decay_exponent": slope,
        "expected_exponent": power_alpha(spec).map(|a| 0.5 - a),
    })))
}

pub fn kernel(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let d = cfg.dimension;
    let sec = &cfg.kernel;
    let spec = &cfg.potential;
    let alpha = power_alpha(spec).ok_or_else(|| {
        CliError::Config("kernel needs a coulomb or homogeneous potential".into())
    })?;
    let law = kernel_singularity_law(d, alpha, spec.kappa)?;
    let zeta = padded("kernel.zeta", &sec.zeta, d - 1)?;
    let grid = SymbolGrid::born(
        spec,
        zeta,
        sec.lambda,
        sec.n,
        sec.spacing,
        sec.cutoff,
        sec.tol,
    )?;
    let fit = kernel_fft_check(&grid, &law, &sec.fft)?;
    let rows: Vec<Vec<f64>> = fit
        .bins
        .iter()
        .map(|b| vec![b.k, b.modulus, b.fitted, b.residual, b.count as f64])
        .collect();
    let header: Vec<String> = ["k", "modulus", "fitted", "residual", "count"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.csv("kernel.csv", &header, &rows)?;
    Ok(Outcome::ok(json!({
        "exponent": fit.exponent,
        "exponent_se": fit.exponent_se,
        "expected_exponent": law.exponent,
        "prefactor_modulus": fit.prefactor_modulus,
        "prefactor_se": fit.prefactor_se,
        "expected_prefactor_modulus": law.prefactor.norm(),
        "free_prefactor": fit.free_prefactor,
        "phase": fit.phase,
        "expected_phase": law.prefactor.arg(),
    })))
}

pub fn airy_compare(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let m = cfg.dimension - 1;
    let sec = &cfg.airy;
    let profile = match &sec.profile {
        Some(p) => p.clone(),
        None => XiProfile::bump(e1(4.5, m), 4.65),
    };
    profile.validate()?;
    if profile.transverse_dim() != Some(m) {
        return Err(CliError::Config(format!(
            "airy.profile must act on {m} transverse components"
        )));
    }
    let fit = asymptotic_convergence(sec.ratio, &sec.xs, &profile, sec.lambda, sec.rel_tol)?;
    let rows: Vec<Vec<f64>> = fit
        .samples
        .iter()
        .map(|s| {
            vec![
                s.x,
                s.y[0],
                s.exact.re,
                s.exact.im,
                s.asymptotic.re,
                s.asymptotic.im,
                s.rel_error,
            ]
        })
        .collect();
    let header: Vec<String> = [
        "x",
        "y_1",
        "exact_re",
        "exact_im",
        "asymptotic_re",
        "asymptotic_im",
        "rel_error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    out.csv("airy_compare.csv", &header, &rows)?;
    Ok(Outcome::ok(json!({
        "points": rows.len(),
        "convergence_exponent": fit.exponent(),
        "final_rel_error": rows.last().map(|r| r[6]),
    })))
}

pub fn verify_all(cfg: &RunConfig, out: &Artifacts) -> Result<Outcome, CliError> {
    let mut reports = Vec::new();
    for id in cfg.verify.selected() {
        let report = run_suite(id, &cfg.verify, cfg.seed, cfg.dimension)?;
        out.csv(
            &format!("verify_{}_{}.csv", report.id, report.name),
            &report.table.header,
            &report.table.rows,
        )?;
        reports.push(report);
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    Ok(Outcome {
        summary: json!({
            "suites": reports,
            "passed": reports.len() - failed,
            "failed": failed,
        }),
        passed: failed == 0,
    })
}
