//! Born-level principal symbol of T(λ) = S(λ) − I and the diagonal
//! singularity of its kernel.
//!
//! Transform convention: T(ζ, ζ') = (2π)^{1−d} ∫ e^{i(ζ−ζ')·y} t(ζ, −y) dy.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::potentials::PotentialSpec;
use crate::quadrature::{adaptive, AdaptiveOptions, GaussLegendre};
use crate::special::{c1_constant, c2_constant, KernelLaw};

/// Largest cut-off the analytic tail bound may demand before the budget
/// is declared exhausted.
const MAX_CUTOFF: f64 = 1e200;

/// R = max(2, ζ² − 2λ + 2).
pub fn default_cutoff(zeta: &[f64], lambda: f64) -> f64 {
    let z2: f64 = zeta.iter().map(|z| z * z).sum();
    (z2 - 2.0 * lambda + 2.0).max(2.0)
}

/// t(ζ, y) = −2i ∫_R^∞ q(x, −y) / √(2x + 2λ − ζ²) dx for the unsoftened
/// potential. The integral is cut at X where the analytic bound
/// C X^{1/2−p}/(p − 1/2) on the remainder drops below tol/4, and the
/// finite part is integrated in v = ln(x/R) to tol/4.
pub fn born_symbol(
    spec: &PotentialSpec,
    zeta: &[f64],
    y: &[f64],
    lambda: f64,
    r: Option<f64>,
    tol: f64,
) -> Result<Complex64> {
    if zeta.len() != y.len() {
        return Err(Error::Config(format!(
            "zeta has {} components but y has {}",
            zeta.len(),
            y.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol = {tol} must be positive")));
    }
    let z2: f64 = zeta.iter().map(|z| z * z).sum();
    let r = r.unwrap_or_else(|| default_cutoff(zeta, lambda));
    let r_min = 1f64.max(0.5 * (z2 - 2.0 * lambda) + 1.0);
    if !(r >= r_min) || !r.is_finite() {
        return Err(Error::domain(
            "born_symbol",
            format!("R = {r} below max(1, (ζ² − 2λ)/2 + 1) = {r_min}"),
        ));
    }
    if spec.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let q = spec.unsoftened();
    let p = q.decay_power();
    if !(p > 0.5) {
        return Err(Error::domain(
            "born_symbol",
            format!("decay power {p} must exceed 1/2"),
        ));
    }
    let c = q.decay_constant();
    let shift = (z2 - 2.0 * lambda).max(0.0);
    // With x ≥ X ≥ shift, √(2x + 2λ − ζ²) ≥ √x, so the remainder is at most
    // C X^{1/2−p}/(p − 1/2).
    let cutoff = (4.0 * c / ((p - 0.5) * tol))
        .powf(1.0 / (p - 0.5))
        .max(shift)
        .max(r);
    if !(cutoff <= MAX_CUTOFF) {
        return Err(Error::budget(
            "kernel",
            "born_symbol",
            format!("tail bound needs a cut-off beyond {MAX_CUTOFF:e} (decay power {p})"),
        ));
    }
    let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut failure = None;
    let opts = AdaptiveOptions {
        abs_tol: 0.25 * tol,
        rel_tol: 0.0,
        max_intervals: 4000,
    };
    let res = adaptive(
        |v: f64| {
            let x = r * v.exp();
            match q.eval(x, &neg_y) {
                Ok(val) => val * x / (2.0 * x + 2.0 * lambda - z2).sqrt(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        (cutoff / r).ln(),
        &opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !res.converged {
        return Err(Error::budget(
            "kernel",
            "born_symbol",
            format!("quadrature error {:e} above tol/4", res.error),
        ));
    }
    Ok(Complex64::new(0.0, -2.0 * res.value))
}

/// −2i κ c₁(α) |y|^{1/2−α}, the large-|y| form of the Born symbol for
/// q = κ r^{−α}; d is taken as |y| + 1 components.
pub fn homogeneous_symbol_asymptote(kappa: f64, alpha: f64, y: &[f64]) -> Result<Complex64> {
    let d = y.len() + 1;
    let upper = d as f64 - 0.5;
    if !(alpha > 0.5 && alpha < upper) {
        return Err(Error::domain(
            "homogeneous_symbol_asymptote",
            format!("alpha = {alpha} outside (1/2, {upper})"),
        ));
    }
    let rho = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Complex64::new(
        0.0,
        -2.0 * kappa * c1_constant(alpha)? * rho.powf(0.5 - alpha),
    ))
}

/// κ c₂(d, α) |ζ − ζ'|^{1/2+α−d}.
pub fn kernel_singularity_law(d: usize, alpha: f64, kappa: f64) -> Result<KernelLaw> {
    Ok(KernelLaw {
        prefactor: c2_constant(d, alpha)? * kappa,
        exponent: 0.5 + alpha - d as f64,
    })
}

/// Symbol samples on the regular grid y_j = (j − n/2)Δ, j = 0..n, in each
/// of the d − 1 transverse directions (row-major, last axis fastest).
#[derive(Clone, Debug)]
pub struct SymbolGrid {
    pub n: usize,
    pub spacing: f64,
    pub zeta: Vec<f64>,
    pub lambda: f64,
    pub values: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn transverse_dim(&self) -> usize {
        self.zeta.len()
    }

    /// L with n·Δ = 2L.
    pub fn half_extent(&self) -> f64 {
        0.5 * self.n as f64 * self.spacing
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * self.n as f64) * self.spacing
    }

    pub fn check_shape(n: usize, spacing: f64, m: usize) -> Result<()> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid size n = {n} must be even and ≥ 4"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Config(format!(
                "grid spacing {spacing} must be positive"
            )));
        }
        if m == 0 || m > 2 {
            return Err(Error::Config(format!(
                "symbol grids support d = 2 or 3, got d = {}",
                m + 1
            )));
        }
        Ok(())
    }

    /// Fills the grid from a function of |y|, evaluated once per distinct
    /// radius inside the disc |y| ≤ L; nodes outside are zero. Nodes within
    /// CORE_CELLS of the origin carry the average of f over their cell
    /// instead of the point value, since f varies there on scales below Δ
    /// (or is singular at the origin).
    pub fn from_radial<F>(
        n: usize,
        spacing: f64,
        zeta: Vec<f64>,
        lambda: f64,
        f: F,
    ) -> Result<SymbolGrid>
    where
        F: Fn(f64) -> Result<Complex64> + Sync,
    {
        let m = zeta.len();
        Self::check_shape(n, spacing, m)?;
        let half = (n / 2) as i64;
        let offsets = |flat: usize| -> Vec<i64> {
            if m == 1 {
                vec![flat as i64 - half]
            } else {
                vec![(flat / n) as i64 - half, (flat % n) as i64 - half]
            }
        };
        let key_of = |o: &[i64]| -> u64 { o.iter().map(|&j| (j * j) as u64).sum() };
        let limit = (half * half) as u64;
        let total = n.pow(m as u32);
        let mut keys: Vec<u64> = (0..total)
            .map(|k| key_of(&offsets(k)))
            .filter(|&k| k <= limit)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let radial: Vec<Complex64> = keys
            .par_iter()
            .map(|&k| f((k as f64).sqrt() * spacing))
            .collect::<Result<_>>()?;
        let mut values: Vec<Complex64> = (0..total)
            .map(|flat| match keys.binary_search(&key_of(&offsets(flat))) {
                Ok(pos) => radial[pos],
                Err(_) => Complex64::new(0.0, 0.0),
            })
            .collect();
        let core: Vec<usize> = (0..total)
            .filter(|&flat| offsets(flat).iter().all(|o| o.abs() <= CORE_CELLS))
            .collect();
        let averages: Vec<Complex64> = core
            .par_iter()
            .map(|&flat| {
                // f is radial, so reflected or permuted cells share one average;
                // the canonical offsets make the grid exactly symmetric.
                let mut o: Vec<i64> = offsets(flat).iter().map(|v| v.abs()).collect();
                o.sort_unstable();
                cell_average(&f, &o, spacing)
            })
            .collect::<Result<_>>()?;
        for (flat, v) in core.into_iter().zip(averages) {
            values[flat] = v;
        }
        Ok(SymbolGrid {
            n,
            spacing,
            zeta,
            lambda,
            values,
        })
    }

    /// Born symbol of a radial potential on the grid.
    pub fn born(
        spec: &PotentialSpec,
        zeta: Vec<f64>,
        lambda: f64,
        n: usize,
        spacing: f64,
        r: Option<f64>,
        tol: f64,
    ) -> Result<SymbolGrid> {
        let m = zeta.len();
        let z = zeta.clone();
        Self::from_radial(n, spacing, zeta, lambda, |rho| {
            let mut y = vec![0.0; m];
            y[0] = rho;
            born_symbol(spec, &z, &y, lambda, r, tol)
        })
    }
}

/// Nodes with every |offset| ≤ CORE_CELLS get cell averages.
const CORE_CELLS: i64 = 3;

/// Mean of the radial function f over the cell centred at offsets·Δ.
/// The origin cell is integrated in polar form so that integrable
/// singularities at ρ = 0 are handled; other cells use an 8-point
/// Gauss–Legendre tensor rule.
fn cell_average<F>(f: &F, offsets: &[i64], spacing: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let h = 0.5 * spacing;
    let opts = AdaptiveOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        max_intervals: 2000,
    };
    let mut failure = None;
    let mut eval = |rho: f64| match f(rho) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            Complex64::new(0.0, 0.0)
        }
    };
    let value = if offsets.iter().all(|&o| o == 0) {
        if offsets.len() == 1 {
            adaptive(&mut eval, 0.0, h, &opts).value * (1.0 / h)
        } else {
            // Square = 8 copies of the triangle 0 ≤ φ ≤ π/4, ρ cos φ ≤ h.
            let rule = GaussLegendre::new(16);
            let radial = |phi: f64, eval: &mut dyn FnMut(f64) -> Complex64| {
                adaptive(|rho: f64| eval(rho) * rho, 0.0, h / phi.cos(), &opts).value
            };
            rule.integrate(|phi| radial(phi, &mut eval), 0.0, PI / 4.0)
                * (8.0 / (spacing * spacing))
        }
    } else {
        let rule = GaussLegendre::new(8);
        if offsets.len() == 1 {
            let c = offsets[0] as f64 * spacing;
            rule.integrate(|a| eval((c + a).abs()), -h, h) * (1.0 / spacing)
        } else {
            let (c0, c1) = (offsets[0] as f64 * spacing, offsets[1] as f64 * spacing);
            rule.integrate(
                |a| rule.integrate(|b| eval((c0 + a).hypot(c1 + b)), -h, h),
                -h,
                h,
            ) * (1.0 / (spacing * spacing))
        }
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FftCheckOptions {
    /// Fraction of the grid radius covered by the cosine taper.
    pub taper_fraction: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    /// Logarithmic radial bins across [k_lo, k_hi].
    pub bins: usize,
}

impl Default for FftCheckOptions {
    fn default() -> Self {
        FftCheckOptions {
            taper_fraction: 0.2,
            k_lo: 5e-4,
            k_hi: 2e-3,
            bins: 12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadialBin {
    pub k: f64,
    pub modulus: f64,
    pub fitted: f64,
    /// |T|/fitted − 1 against the free power-law fit.
    pub residual: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelFit {
    pub exponent: f64,
    pub exponent_se: f64,
    /// Modulus of the prefactor with the exponent fixed at the law's value.
    pub prefactor_modulus: f64,
    pub prefactor_se: f64,
    /// Prefactor of the free two-parameter fit.
    pub free_prefactor: f64,
    /// arg Σ T over the window.
    pub phase: f64,
    pub law: KernelLaw,
    pub bins: Vec<RadialBin>,
}

fn taper(rho: f64, half_extent: f64, fraction: f64) -> f64 {
    let start = (1.0 - fraction) * half_extent;
    if rho <= start {
        1.0
    } else if rho >= half_extent {
        0.0
    } else {
        0.5 * (1.0 + (PI * (rho - start) / (half_extent - start)).cos())
    }
}

/// Discrete transform of the tapered grid in the stated convention, binned
/// radially over [k_lo, k_hi] and fitted in log-log form.
pub fn kernel_fft_check(
    grid: &SymbolGrid,
    law: &KernelLaw,
    opts: &FftCheckOptions,
) -> Result<KernelFit> {
    let n = grid.n;
    let m = grid.transverse_dim();
    SymbolGrid::check_shape(n, grid.spacing, m)?;
    if grid.values.len() != n.pow(m as u32) {
        return Err(Error::Config(
            "grid value count does not match its shape".into(),
        ));
    }
    let dk = 2.0 * PI / (n as f64 * grid.spacing);
    let nyquist = PI / grid.spacing;
    if !(opts.k_lo >= 2.0 * dk && opts.k_hi <= 0.5 * nyquist && opts.k_lo < opts.k_hi) {
        return Err(Error::Config(format!(
            "fit window [{}, {}] outside the resolvable band [{}, {}]",
            opts.k_lo,
            opts.k_hi,
            2.0 * dk,
            0.5 * nyquist
        )));
    }
    if !(opts.taper_fraction > 0.0 && opts.taper_fraction <= 1.0) || opts.bins < 3 {
        return Err(Error::Config(
            "taper fraction must lie in (0, 1] and at least three bins are needed".into(),
        ));
    }
    let big_l = grid.half_extent();
    let mirror = |j: usize| (n - j) % n;
    // b_j = t(−y_j)·w(|y_j|).
    let mut buf: Vec<Complex64> = if m == 1 {
        (0..n)
            .map(|j| {
                grid.values[mirror(j)] * taper(grid.coordinate(j).abs(), big_l, opts.taper_fraction)
            })
            .collect()
    } else {
        (0..n * n)
            .map(|flat| {
                let (a, b) = (flat / n, flat % n);
                let rho = grid.coordinate(a).hypot(grid.coordinate(b));
                grid.values[mirror(a) * n + mirror(b)] * taper(rho, big_l, opts.taper_fraction)
            })
            .collect()
    };
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(n, FftDirection::Inverse);
    if m == 1 {
        fft.process(&mut buf);
    } else {
        for row in buf.chunks_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = buf[r * n + c];
            }
            fft.process(&mut col);
            for r in 0..n {
                buf[r * n + c] = col[r];
            }
        }
    }
    // e^{ik_m·y_j} = (−1)^m e^{2πi mj/n} for y_j = (j − n/2)Δ.
    let norm = (2.0 * PI).powi(-(m as i32)) * grid.spacing.powi(m as i32);
    let signed = |i: usize| {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    };
    let ln_lo = opts.k_lo.ln();
    let width = (opts.k_hi.ln() - ln_lo) / opts.bins as f64;
    let mut sum_k = vec![0.0; opts.bins];
    let mut sum_t = vec![0.0; opts.bins];
    let mut count = vec![0usize; opts.bins];
    let mut total = Complex64::new(0.0, 0.0);
    for (flat, v) in buf.iter().enumerate() {
        let ms: Vec<i64> = if m == 1 {
            vec![signed(flat)]
        } else {
            vec![signed(flat / n), signed(flat % n)]
        };
        let k = dk * (ms.iter().map(|&q| (q * q) as f64).sum::<f64>()).sqrt();
        if k < opts.k_lo || k >= opts.k_hi {
            continue;
        }
        let parity = if ms.iter().sum::<i64>() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        let t = v * (parity * norm);
        total += t;
        let b = (((k.ln() - ln_lo) / width) as usize).min(opts.bins - 1);
        sum_k[b] += k;
        sum_t[b] += t.norm();
        count[b] += 1;
    }
    let populated: Vec<usize> = (0..opts.bins).filter(|&b| count[b] > 0).collect();
    if populated.len() < 3 {
        return Err(Error::insufficient(
            "kernel_fft_check",
            format!("only {} populated radial bins", populated.len()),
        ));
    }
    let ks: Vec<f64> = populated
        .iter()
        .map(|&b| sum_k[b] / count[b] as f64)
        .collect();
    let ts: Vec<f64> = populated
        .iter()
        .map(|&b| sum_t[b] / count[b] as f64)
        .collect();
    let free = fit::power_law(&ks, &ts)?;
    let offsets: Vec<f64> = ks
        .iter()
        .zip(&ts)
        .map(|(k, t)| t.ln() - law.exponent * k.ln())
        .collect();
    let nb = offsets.len() as f64;
    let mean = offsets.iter().sum::<f64>() / nb;
    let var = offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (nb - 1.0);
    let prefactor_modulus = mean.exp();
    let bins = populated
        .iter()
        .zip(ks.iter().zip(&ts))
        .map(|(&b, (&k, &t))| {
            let fitted = free.predict(k.ln()).exp();
            RadialBin {
                k,
                modulus: t,
                fitted,
                residual: t / fitted - 1.0,
                count: count[b],
            }
        })
        .collect();
    Ok(KernelFit {
        exponent: free.slope,
        exponent_se: free.slope_se,
        prefactor_modulus,
        prefactor_se: prefactor_modulus * (var / nb).sqrt(),
        free_prefactor: free.intercept.exp(),
        phase: total.arg(),
        law: *law,
        bins,
    })
}
