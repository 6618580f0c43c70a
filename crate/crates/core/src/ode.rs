//! Dormand–Prince 5(4) integrator with the standard continuous extension.

use crate::error::Error;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub initial_step: f64,
    pub max_steps: usize,
}

/// Step-level information handed to the observer after every accepted step.
pub struct Accepted<'a> {
    pub t_old: f64,
    pub t: f64,
    pub y: &'a [f64],
    dense: &'a Dense,
}

impl Accepted<'_> {
    /// Continuous extension at time `s` within the step.
    pub fn interpolate(&self, s: f64, out: &mut [f64]) {
        self.dense.eval(self.t_old, self.t - self.t_old, s, out);
    }
}

pub enum Control {
    Continue,
    Stop,
}

/// Integration failure: where it happened and why.
#[derive(Debug)]
pub struct OdeFailure {
    pub t: f64,
    pub msg: String,
    pub source: Option<Error>,
}

struct Dense {
    r: [Vec<f64>; 5],
}

impl Dense {
    fn eval(&self, t_old: f64, h: f64, s: f64, out: &mut [f64]) {
        let th = (s - t_old) / h;
        let th1 = 1.0 - th;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r[0][i]
                + th * (self.r[1][i]
                    + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])));
        }
    }
}

/// Integrates y' = f(t, y) from `t0` to `t_end` (either direction).
///
/// A component with value v contributes |err| / (scale(i, t, y)·(1 + |v|))
/// to the RMS local error norm, and steps are accepted when the norm is at
/// most one. `h_max(t)` caps the step magnitude. The observer sees every accepted
/// step and may stop the integration early. Returns the final time and
/// state.
pub fn solve<F, S, H, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    scale: &S,
    h_max: H,
    mut observer: O,
) -> Result<(f64, Vec<f64>), OdeFailure>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), Error>,
    S: Fn(usize, f64, &[f64]) -> f64,
    H: Fn(f64) -> f64,
    O: FnMut(&Accepted) -> Control,
{
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let fail = |t: f64, e: Error| OdeFailure {
        t,
        msg: e.to_string(),
        source: Some(e),
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut dense = Dense {
        r: [
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
        ],
    };
    f(t, &y, &mut k[0]).map_err(|e| fail(t, e))?;
    let mut h = opts
        .initial_step
        .abs()
        .min(h_max(t))
        .min((t_end - t0).abs())
        * dir;
    let mut steps = 0usize;
    let mut err_old = 1e-4f64;
    let mut rejected_last = false;
    while (t_end - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            return Err(OdeFailure {
                t,
                msg: format!("step budget of {} exhausted", opts.max_steps),
                source: None,
            });
        }
        let cap = h_max(t);
        if h.abs() > cap {
            h = cap * dir;
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(OdeFailure {
                t,
                msg: format!("step size underflow (h = {h})"),
                source: None,
            });
        }
        steps += 1;

        let stage = |k: &[Vec<f64>], coef: &[(usize, f64)], y: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut acc = 0.0;
                for &(j, a) in coef {
                    acc += a * k[j][i];
                }
                out[i] = y[i] + h * acc;
            }
        };
        let stages: [(f64, &[(usize, f64)]); 5] = [
            (C2, &[(0, A21)]),
            (C3, &[(0, A31), (1, A32)]),
            (C4, &[(0, A41), (1, A42), (2, A43)]),
            (C5, &[(0, A51), (1, A52), (2, A53), (3, A54)]),
            (1.0, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]),
        ];
        let mut stage_failed = None;
        for (s, (c, coef)) in stages.iter().enumerate() {
            stage(&k, coef, &y, &mut ytmp);
            if let Err(e) = f(t + c * h, &ytmp, &mut k[s + 1]) {
                stage_failed = Some(e);
                break;
            }
        }
        if let Some(e) = stage_failed {
            // Shrink and retry; a persistent failure surfaces as underflow
            // unless the failure is a hard domain error at the current state.
            if matches!(e, Error::Domain { .. }) && h.abs() < 1e-6 * t.abs().max(1.0) {
                return Err(fail(t, e));
            }
            h *= 0.25;
            rejected_last = true;
            continue;
        }
        stage(
            &k,
            &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)],
            &y,
            &mut ynew,
        );
        if let Err(e) = f(t + h, &ynew, &mut k[6]) {
            if matches!(e, Error::Domain { .. }) && h.abs() < 1e-6 * t.abs().max(1.0) {
                return Err(fail(t, e));
            }
            h *= 0.25;
            rejected_last = true;
            continue;
        }
        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = scale(i, t, &y) * (1.0 + y[i].abs().max(ynew[i].abs()));
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            rejected_last = true;
            continue;
        }
        if err <= 1.0 {
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k[0][i] - dy;
                dense.r[0][i] = y[i];
                dense.r[1][i] = dy;
                dense.r[2][i] = bspl;
                dense.r[3][i] = dy - h * k[6][i] - bspl;
                dense.r[4][i] = h
                    * (D1 * k[0][i]
                        + D3 * k[2][i]
                        + D4 * k[3][i]
                        + D5 * k[4][i]
                        + D6 * k[5][i]
                        + D7 * k[6][i]);
            }
            let t_new = t + h;
            let info = Accepted {
                t_old: t,
                t: t_new,
                y: &ynew,
                dense: &dense,
            };
            let ctl = observer(&info);
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            if let Control::Stop = ctl {
                break;
            }
            // PI step-size control.
            let mut fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_old.powf(0.4 / 5.0);
            fac = fac.clamp(0.2, 10.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_old = err.max(1e-4);
            h *= fac;
            rejected_last = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            rejected_last = true;
        }
    }
    Ok((t, y))
}
