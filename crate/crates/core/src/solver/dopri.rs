//! Dormand-Prince 5(4) with PI step control and continuous output.

use super::SolverError;

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

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
/// Steps below this fraction of the final time count as underflow.
pub const UNDERFLOW_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Scaled error norm of the last accepted step.
    pub last_error: f64,
    pub last_h: f64,
}

fn error_norm(e: &[f64], y0: &[f64], y1: &[f64], atol: f64, rtol: f64) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..e.len() {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        m = m.max(e[i].abs() / sc);
    }
    m
}

fn initial_step<F: FnMut(&[f64], &mut [f64])>(
    f: &mut F,
    y0: &[f64],
    f0: &[f64],
    opts: &Dopri5Options,
    t_end: f64,
) -> f64 {
    let n = y0.len();
    let sc = |i: usize| opts.atol + opts.rtol * y0[i].abs();
    let d0 = (0..n).map(|i| y0[i].abs() / sc(i)).fold(0.0, f64::max);
    let d1 = (0..n).map(|i| f0[i].abs() / sc(i)).fold(0.0, f64::max);
    let mut h0 = if d0 <= 1e-10 || d1 <= 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(t_end);
    let y1: Vec<f64> = (0..n).map(|i| y0[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(&y1, &mut f1);
    let d2 = (0..n).map(|i| (f1[i] - f0[i]).abs() / sc(i)).fold(0.0, f64::max) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_end)
}

/// Integrate `y' = f(y)` from `t = 0` and report the state at every
/// instant of `t_out` (strictly increasing, positive) through `emit`.
pub fn integrate<F, E>(
    mut f: F,
    y0: &[f64],
    t_out: &[f64],
    opts: &Dopri5Options,
    mut emit: E,
) -> Result<StepStats, SolverError>
where
    F: FnMut(&[f64], &mut [f64]),
    E: FnMut(usize, f64, &[f64], &StepStats),
{
    let n = y0.len();
    let mut stats = StepStats::default();
    let Some(&t_end) = t_out.last() else {
        return Ok(stats);
    };
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut ys = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut interp = vec![0.0; n];
    let mut rc5 = vec![0.0; n];
    f(&y, &mut k1);
    let mut h = opts.h_init.unwrap_or_else(|| initial_step(&mut f, &y, &k1, opts, t_end));
    let h_floor = UNDERFLOW_FLOOR * t_end;
    let expo1 = 0.2 - BETA * 0.75;
    let mut facold: f64 = 1e-4;
    let mut t = 0.0;
    let mut next_out = 0;
    let mut steps = 0;
    while next_out < t_out.len() {
        if steps >= opts.max_steps {
            return Err(SolverError::StepLimit { t, steps });
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h < h_floor {
            return Err(SolverError::StepUnderflow { t, h });
        }
        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(&ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(&ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(&ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(&ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(&ys, &mut k6);
        for i in 0..n {
            y1[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(&y1, &mut k7);
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y1, opts.atol, opts.rtol);
        if !e.is_finite() {
            stats.rejected += 1;
            h *= 0.5;
            continue;
        }
        let fac11 = e.powf(expo1);
        let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        if e <= 1.0 {
            facold = e.max(1e-4);
            stats.accepted += 1;
            stats.last_error = e;
            stats.last_h = h;
            let t_new = if last { t_end } else { t + h };
            // continuous output over (t, t_new]
            if next_out < t_out.len() && t_out[next_out] <= t_new {
                for i in 0..n {
                    rc5[i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                while next_out < t_out.len() && t_out[next_out] <= t_new {
                    let to = t_out[next_out];
                    if to == t_new {
                        emit(next_out, to, &y1, &stats);
                    } else {
                        let th = (to - t) / h;
                        let th1 = 1.0 - th;
                        for i in 0..n {
                            let r2 = y1[i] - y[i];
                            let r3 = h * k1[i] - r2;
                            let r4 = r2 - h * k7[i] - r3;
                            interp[i] = y[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * rc5[i])));
                        }
                        emit(next_out, to, &interp, &stats);
                    }
                    next_out += 1;
                }
            }
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            h /= fac;
        } else {
            stats.rejected += 1;
            h *= (1.0 / fac).min(0.5);
        }
    }
    Ok(stats)
}
