//! Classical-quantum correspondence checks: the Schrodinger potential of a
//! Lax pair against the classical potential with shifted parameters, the
//! stationary and Fuchs-Garnier scalar reductions, and recovery of `u` as
//! the zero of `b`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian, potential, PainleveKind, ParamSet};
use crate::elliptic::C64;
use crate::error::{Error, Result};
use crate::lax::{LaxEval, Pipeline};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Parameters of the quantum Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedParams {
    pub params: ParamSet,
    /// Names of the components that moved.
    pub shifted: Vec<String>,
}

pub fn shift_params(params: &ParamSet) -> ShiftedParams {
    let e = 0.125;
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
    match *params {
        ParamSet::P4 { alpha, beta } => ShiftedParams {
            params: ParamSet::P4 {
                alpha,
                beta: beta + 0.5,
            },
            shifted: names(&["beta"]),
        },
        ParamSet::P5 {
            alpha,
            beta,
            gamma,
            delta,
        } => ShiftedParams {
            params: ParamSet::P5 {
                alpha: alpha - e,
                beta: beta + e,
                gamma,
                delta,
            },
            shifted: names(&["alpha", "beta"]),
        },
        ParamSet::P6 {
            alpha,
            beta,
            gamma,
            delta,
        } => ShiftedParams {
            params: ParamSet::P6 {
                alpha: alpha - e,
                beta: beta + e,
                gamma: gamma - e,
                delta: delta + e,
            },
            shifted: names(&["alpha", "beta", "gamma", "delta"]),
        },
        p => ShiftedParams {
            params: p,
            shifted: Vec::new(),
        },
    }
}

/// `U(x, t) = det(U)/2 - a_x/2 + A`.
pub fn schrodinger_potential(l: &LaxEval, a_x: C64) -> C64 {
    0.5 * l.det_u() - 0.5 * a_x + l.big_a()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub kind: PainleveKind,
    pub t: f64,
    pub params: ParamSet,
    pub shifted_params: ParamSet,
    pub shift_applied: bool,
    /// `max |U(x,t) + H - V_shifted(x,t)|` over the grid, before any fit.
    pub max_dev: f64,
    /// Mean of the deviation: the best constant fit.
    #[serde(with = "crate::cser")]
    pub offset: C64,
    /// Largest deviation after removing `offset`.
    pub max_dev_after_offset: f64,
    /// Mean of `V_shifted(x,t) - U(x,t)`: the extracted x-independent part.
    #[serde(with = "crate::cser")]
    pub extracted_h: C64,
    /// Classical Hamiltonian with the unshifted parameters.
    #[serde(with = "crate::cser")]
    pub hamiltonian: C64,
    pub grid_size: usize,
}

/// Potential `U(x, t)` of a pipeline at one point.
pub fn pipeline_potential(p: &Pipeline, x: C64, t: f64) -> Result<C64> {
    let l = p.eval(x, t)?;
    Ok(schrodinger_potential(&l, l.a_x()))
}

pub fn separation_check(p: &Pipeline, t: f64, x_grid: &[C64], shift: bool) -> Result<SeparationReport> {
    if x_grid.is_empty() {
        return Err(Error::Argument("empty x grid".into()));
    }
    let params = *p.params();
    let sp = if shift {
        shift_params(&params).params
    } else {
        params
    };
    let s = p.state_at(t)?;
    let h = hamiltonian(&params, &s)?;
    let mut devs = Vec::with_capacity(x_grid.len());
    let mut ext = c(0.0);
    for &x in x_grid {
        let up = pipeline_potential(p, x, t)?;
        let vs = potential(&sp, x, t)?;
        devs.push(up + h - vs);
        ext += vs - up;
    }
    let n = x_grid.len() as f64;
    let offset = devs.iter().sum::<C64>() / n;
    let max_dev = devs.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let max_after = devs.iter().map(|d| (d - offset).norm()).fold(0.0, f64::max);
    Ok(SeparationReport {
        kind: params.kind(),
        t,
        params,
        shifted_params: sp,
        shift_applied: shift,
        max_dev,
        offset,
        max_dev_after_offset: max_after,
        extracted_h: ext / n,
        hamiltonian: h,
        grid_size: x_grid.len(),
    })
}

/// Real grid of `n` points in `[lo, hi]` (shifted by `im` into the complex
/// plane), dropping points within `margin` of any of `avoid`.
pub fn safe_grid(lo: f64, hi: f64, im: f64, n: usize, avoid: &[C64], margin: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(n);
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    for k in 0..n {
        let x = C64::new(lo + step * k as f64, im);
        if avoid.iter().all(|a| (x - a).norm() >= margin) {
            out.push(x);
        }
    }
    out
}

// --- stationary reduction ---------------------------------------------------

/// Distance below which a point counts as sitting on the apparent
/// singularity `b = 0`.
pub const APPARENT_GUARD: f64 = 0.04;
const CAUCHY_R: f64 = 0.01;
const CAUCHY_N: usize = 32;

/// `f^(k)(x)` for `k = 0..=order` from samples on a circle of radius `r`
/// (trapezoid rule for the Cauchy integral; exponentially accurate when
/// `f` is analytic on a larger disc).
pub fn cauchy_derivatives<F>(f: F, x: C64, r: f64, n: usize, order: usize) -> Result<Vec<C64>>
where
    F: Fn(C64) -> Result<C64>,
{
    let samples: Vec<(C64, C64)> = (0..n)
        .map(|k| {
            let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            Ok((e, f(x + r * e)?))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for m in 0..=order {
        if m > 0 {
            fact *= m as f64;
        }
        let s: C64 = samples.iter().map(|(e, v)| v * e.powi(-(m as i32))).sum();
        out.push(s / n as f64 * fact / r.powi(m as i32));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryReduction {
    #[serde(with = "crate::cser")]
    pub x: C64,
    pub t: f64,
    #[serde(with = "crate::cser")]
    pub u_pot: C64,
    #[serde(with = "crate::cser")]
    pub w: C64,
    #[serde(with = "crate::cser")]
    pub check_w: C64,
    #[serde(with = "crate::cser")]
    pub lambda: C64,
    /// `|W - U + d_t log b / 2 - d_x^2 log b / 4 - (d_x log b)^2 / 4|`,
    /// with the log-derivatives computed separately from `W`.
    pub w_relation: f64,
    /// Residual of the Fuchs-Garnier integrability condition.
    pub fg_residual: f64,
}

/// x-jets at fixed t of `b` (to 4th order), `b_t` and `U` (to 1st).
struct Jets {
    b: Vec<C64>,
    bt: Vec<C64>,
    up: Vec<C64>,
}

fn jets(p: &Pipeline, x: C64, t: f64, h_t: f64) -> Result<Jets> {
    let l = p.eval(x, t)?;
    if (l.b() / l.b_x()).norm() < APPARENT_GUARD {
        return Err(Error::Pole {
            what: "apparent singularity (zero of b)".into(),
            at: x,
        });
    }
    let b = cauchy_derivatives(|z| Ok(p.eval(z, t)?.b()), x, CAUCHY_R, CAUCHY_N, 4)?;
    let bt = cauchy_derivatives(
        |z| Ok((p.eval(z, t + h_t)?.b() - p.eval(z, t - h_t)?.b()) / (2.0 * h_t)),
        x,
        CAUCHY_R,
        CAUCHY_N,
        1,
    )?;
    let up = cauchy_derivatives(|z| pipeline_potential(p, z, t), x, CAUCHY_R, CAUCHY_N, 1)?;
    Ok(Jets { b, bt, up })
}

impl Jets {
    /// `(log b)^(k)` for k = 1..=4.
    fn log_b(&self) -> [C64; 4] {
        let b = &self.b;
        let r1 = b[1] / b[0];
        let (r2, r3, r4) = (b[2] / b[0], b[3] / b[0], b[4] / b[0]);
        [
            r1,
            r2 - r1 * r1,
            r3 - 3.0 * r2 * r1 + 2.0 * r1.powi(3),
            r4 - 4.0 * r3 * r1 - 3.0 * r2 * r2 + 12.0 * r2 * r1 * r1 - 6.0 * r1.powi(4),
        ]
    }

    fn w(&self) -> (C64, C64) {
        let (b, bt, up) = (&self.b, &self.bt, &self.up);
        let w = up[0] - bt[0] / (2.0 * b[0]) + b[2] / (4.0 * b[0]);
        let w_x = up[1] - (bt[1] / b[0] - bt[0] * b[1] / (b[0] * b[0])) / 2.0
            + (b[3] / b[0] - b[2] * b[1] / (b[0] * b[0])) / 4.0;
        (w, w_x)
    }

    fn check_w(&self) -> (C64, C64) {
        let (w, w_x) = self.w();
        let l = self.log_b();
        (
            w + 0.25 * l[1] - 0.125 * l[0] * l[0],
            w_x + 0.25 * l[2] - 0.25 * l[0] * l[1],
        )
    }
}

pub fn stationary_reduction(p: &Pipeline, x: C64, t: f64, h_t: f64) -> Result<StationaryReduction> {
    let j = jets(p, x, t, h_t)?;
    let l = j.log_b();
    let (w, _) = j.w();
    let w_relation =
        (w - j.up[0] + 0.5 * j.bt[0] / j.b[0] - 0.25 * l[1] - 0.25 * l[0] * l[0]).norm();
    let (cw, cw_x) = j.check_w();
    let (lam, lam_x, lam_xxx) = (0.5 * l[0], 0.5 * l[1], 0.5 * l[3]);
    let cw_t =
        (jets(p, x, t + h_t, h_t)?.check_w().0 - jets(p, x, t - h_t, h_t)?.check_w().0) / (2.0 * h_t);
    let fg = cw_t - 2.0 * cw * lam_x - lam * cw_x - 0.25 * lam_xxx;
    Ok(StationaryReduction {
        x,
        t,
        u_pot: j.up[0],
        w,
        check_w: cw,
        lambda: lam,
        w_relation,
        fg_residual: fg.norm(),
    })
}

// --- zero of b ----------------------------------------------------------------

/// Number of zeros minus poles of `b` inside the circle `|x - center| < r`,
/// by the argument principle with the analytic `b_x`.
pub fn zero_count<F>(pair: &F, t: f64, center: C64, r: f64) -> Result<i64>
where
    F: Fn(C64, f64) -> Result<LaxEval>,
{
    let n = 512;
    let mut s = c(0.0);
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        let e = C64::from_polar(1.0, th);
        let l = pair(center + r * e, t)?;
        // dz = i r e dtheta
        s += l.b_x() / l.b() * C64::new(0.0, r) * e;
    }
    let w = s * (2.0 * PI / n as f64) / C64::new(0.0, 2.0 * PI);
    if (w.re - w.re.round()).abs() > 1e-3 || w.im.abs() > 1e-3 {
        return Err(Error::Convergence(format!(
            "winding number {w} is not close to an integer"
        )));
    }
    Ok(w.re.round() as i64)
}

/// The unique zero of `b(., t)` in the disc `|x - center| < r`.
pub fn locate_zero<F>(pair: &F, t: f64, center: C64, r: f64) -> Result<C64>
where
    F: Fn(C64, f64) -> Result<LaxEval>,
{
    let n = zero_count(pair, t, center, r)?;
    if n != 1 {
        return Err(Error::Ambiguity(n));
    }
    let mut z = center;
    for _ in 0..50 {
        let l = pair(z, t)?;
        let step = l.b() / l.b_x();
        z -= step;
        if step.norm() < 1e-13 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    Err(Error::Convergence("Newton iteration on b did not converge in 50 steps".into()))
}

pub fn locate_u_from_b(p: &Pipeline, t: f64, center: C64, r: f64) -> Result<C64> {
    locate_zero(&|x: C64, t: f64| p.eval(x, t), t, center, r)
}
