//! Dormand–Prince 5(4) with local error control, restarted at breakpoints.
//!
//! Stage times are kept strictly inside the current segment so a one-step
//! method never samples the coefficient on the far side of a jump.

use crate::error::{Error, Result};

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

pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on |h|.
    pub max_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions::with_tol(DEFAULT_SOLVER_TOL)
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { rtol: tol, atol: tol, max_steps: 50_000_000, max_step: f64::INFINITY }
    }

    /// The nominal tolerance (the larger of rtol and atol).
    pub fn tol(&self) -> f64 {
        self.rtol.max(self.atol)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl StepStats {
    pub fn merge(&mut self, other: StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
    }
}

struct Work {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Work {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` in place, restarting at
/// every breakpoint strictly between them. `h_hint` carries the step size
/// between calls.
pub(crate) fn integrate<F>(
    rhs: &mut F,
    y: &mut [f64],
    t0: f64,
    t1: f64,
    breakpoints: &[f64],
    opts: &SolverOptions,
    h_hint: &mut Option<f64>,
    stats: &mut StepStats,
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if t0 == t1 {
        return Ok(());
    }
    let dir = if t1 > t0 { 1.0 } else { -1.0 };
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    let mut nodes: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > lo && b < hi).collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    if dir < 0.0 {
        nodes.reverse();
    }
    nodes.insert(0, t0);
    nodes.push(t1);

    let mut work = Work::new(y.len());
    for w in nodes.windows(2) {
        segment(rhs, y, w[0], w[1], opts, h_hint, stats, &mut work)?;
    }
    Ok(())
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &SolverOptions) -> f64 {
    let mut m = 0.0f64;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        m = m.max(err[i].abs() / sc);
    }
    m
}

#[allow(clippy::too_many_arguments)]
fn segment<F>(
    rhs: &mut F,
    y: &mut [f64],
    a: f64,
    b: f64,
    opts: &SolverOptions,
    h_hint: &mut Option<f64>,
    stats: &mut StepStats,
    w: &mut Work,
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let dir = if b > a { 1.0 } else { -1.0 };
    let span = (b - a).abs();
    let scale = a.abs().max(b.abs()).max(1.0);
    let guard = (4.0 * f64::EPSILON * scale).min(0.25 * span);
    let (seg_lo, seg_hi) = (a.min(b) + guard, a.max(b) - guard);
    let clamp = |t: f64| t.clamp(seg_lo, seg_hi);

    let mut t = a;
    rhs(clamp(t), y, &mut w.k[0]);
    stats.evaluations += 1;

    let mut h = match *h_hint {
        Some(h) => h.abs(),
        None => {
            let h = initial_step(rhs, y, t, dir, opts, w, &clamp);
            stats.evaluations += 1;
            h
        }
    };
    h = h.min(opts.max_step).min(span);
    let min_step = 16.0 * f64::EPSILON * scale;

    loop {
        let remaining = (b - t).abs();
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        let hd = dir * hs;

        // stages
        for i in 0..n {
            w.tmp[i] = y[i] + hd * A21 * w.k[0][i];
        }
        rhs(clamp(t + C2 * hd), &w.tmp, &mut w.k[1]);
        for i in 0..n {
            w.tmp[i] = y[i] + hd * (A31 * w.k[0][i] + A32 * w.k[1][i]);
        }
        rhs(clamp(t + C3 * hd), &w.tmp, &mut w.k[2]);
        for i in 0..n {
            w.tmp[i] = y[i] + hd * (A41 * w.k[0][i] + A42 * w.k[1][i] + A43 * w.k[2][i]);
        }
        rhs(clamp(t + C4 * hd), &w.tmp, &mut w.k[3]);
        for i in 0..n {
            w.tmp[i] = y[i] + hd * (A51 * w.k[0][i] + A52 * w.k[1][i] + A53 * w.k[2][i] + A54 * w.k[3][i]);
        }
        rhs(clamp(t + C5 * hd), &w.tmp, &mut w.k[4]);
        for i in 0..n {
            w.tmp[i] = y[i]
                + hd * (A61 * w.k[0][i] + A62 * w.k[1][i] + A63 * w.k[2][i] + A64 * w.k[3][i] + A65 * w.k[4][i]);
        }
        let t_new = if last { b } else { t + hd };
        rhs(clamp(t_new), &w.tmp, &mut w.k[5]);
        for i in 0..n {
            w.y_new[i] = y[i]
                + hd * (A71 * w.k[0][i] + A73 * w.k[2][i] + A74 * w.k[3][i] + A75 * w.k[4][i] + A76 * w.k[5][i]);
        }
        rhs(clamp(t_new), &w.y_new, &mut w.k[6]);
        stats.evaluations += 6;

        for i in 0..n {
            w.tmp[i] = hd
                * (E1 * w.k[0][i] + E3 * w.k[2][i] + E4 * w.k[3][i] + E5 * w.k[4][i] + E6 * w.k[5][i]
                    + E7 * w.k[6][i]);
        }
        let err = error_norm(y, &w.y_new, &w.tmp, opts);

        if !err.is_finite() || w.y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationFailure {
                t,
                step: hs,
                reason: "non-finite state or error estimate".into(),
            });
        }

        if err <= 1.0 {
            y.copy_from_slice(&w.y_new);
            t = t_new;
            w.k.swap(0, 6);
            stats.accepted += 1;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a truncated final step says nothing about the natural step size
            if !last {
                h = (hs * fac).min(opts.max_step);
            } else {
                h = h.max(hs * fac).min(opts.max_step);
            }
            *h_hint = Some(h);
            if last {
                break;
            }
            if h < min_step {
                return Err(Error::IntegrationFailure { t, step: h, reason: "step size underflow".into() });
            }
        } else {
            stats.rejected += 1;
            h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h < min_step {
                return Err(Error::IntegrationFailure {
                    t,
                    step: h,
                    reason: "step size underflow".into(),
                });
            }
        }
        if stats.accepted + stats.rejected > opts.max_steps {
            return Err(Error::IntegrationFailure { t, step: h, reason: "step budget exhausted".into() });
        }
    }
    Ok(())
}

fn initial_step<F, C>(rhs: &mut F, y: &[f64], t: f64, dir: f64, opts: &SolverOptions, w: &mut Work, clamp: &C) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
    C: Fn(f64) -> f64,
{
    let n = y.len();
    let sc = |i: usize| opts.atol + opts.rtol * y[i].abs();
    let rms = |v: &[f64]| (v.iter().enumerate().map(|(i, x)| (x / sc(i)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(&w.k[0]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    for i in 0..n {
        w.tmp[i] = y[i] + dir * h0 * w.k[0][i];
    }
    rhs(clamp(t + dir * h0), &w.tmp, &mut w.k[1]);
    let diff: Vec<f64> = (0..n).map(|i| w.k[1][i] - w.k[0][i]).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
