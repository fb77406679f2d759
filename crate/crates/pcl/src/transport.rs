//! Transport of the two-component wave function along `x` and `t`, the
//! plaquette (loop) defect, and the Schrodinger residual of the scalar
//! wave function.

use std::io::Write;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::cser::cell;
use crate::correspondence::shift_params;
use crate::dynamics::{hamiltonian, potential, CalogeroState};
use crate::elliptic::C64;
use crate::error::{Error, Result};
use crate::integrate::CumulativeIntegral;
use crate::lax::{frobenius, GaugeFactor, LaxEval, Mat2, Pipeline};

pub type Vec2 = Vector2<C64>;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveState {
    pub psi: Vec2,
    pub x: C64,
    pub t: f64,
}

impl WaveState {
    pub fn new(psi1: C64, psi2: C64, x: C64, t: f64) -> Self {
        Self {
            psi: Vec2::new(psi1, psi2),
            x,
            t,
        }
    }

    pub fn basis(k: usize, x: C64, t: f64) -> Self {
        if k == 0 {
            Self::new(c(1.0), c(0.0), x, t)
        } else {
            Self::new(c(0.0), c(1.0), x, t)
        }
    }
}

fn path_err(e: Error) -> Error {
    match e {
        Error::Pole { what, at } => Error::Path(format!("{what} at {at} on the transport path")),
        other => other,
    }
}

/// RK4 for `dY/ds = A(s) Y` with `Y` a 2x2 matrix; `a(s)` returns the
/// generator already multiplied by the path velocity.
fn rk4_matrix<F>(a: F, steps: usize, y0: Mat2) -> Result<Mat2>
where
    F: Fn(f64) -> Result<Mat2>,
{
    let h = 1.0 / steps as f64;
    let hc = c(h);
    let mut y = y0;
    let mut a0 = a(0.0)?;
    for k in 0..steps {
        let s = k as f64 * h;
        let am = a(s + 0.5 * h)?;
        let a1 = a(s + h)?;
        let k1 = a0 * y;
        let k2 = am * (y + k1 * (hc * 0.5));
        let k3 = am * (y + k2 * (hc * 0.5));
        let k4 = a1 * (y + k3 * hc);
        y += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * (hc / 6.0);
        a0 = a1;
    }
    Ok(y)
}

/// Fundamental matrix of `d_x Psi = U Psi` along the straight segment from
/// `x0` to `x1` at fixed `t`.
pub fn propagator_x<F>(pair: &F, t: f64, x0: C64, x1: C64, steps: usize) -> Result<Mat2>
where
    F: Fn(C64, f64) -> Result<LaxEval>,
{
    if steps == 0 {
        return Err(Error::Argument("steps must be positive".into()));
    }
    let d = x1 - x0;
    rk4_matrix(|s| Ok(pair(x0 + s * d, t).map_err(path_err)?.um * d), steps, Mat2::identity())
}

/// Fundamental matrix of `d_t Psi = V Psi` from `t0` to `t1` at fixed `x`.
pub fn propagator_t<F>(pair: &F, x: C64, t0: f64, t1: f64, steps: usize) -> Result<Mat2>
where
    F: Fn(C64, f64) -> Result<LaxEval>,
{
    if steps == 0 {
        return Err(Error::Argument("steps must be positive".into()));
    }
    let d = t1 - t0;
    rk4_matrix(
        |s| Ok(pair(x, t0 + s * d).map_err(path_err)?.vm * c(d)),
        steps,
        Mat2::identity(),
    )
}

pub fn transport_x(p: &Pipeline, w: &WaveState, x_target: C64, steps: usize) -> Result<WaveState> {
    let m = propagator_x(&|x, t| p.eval(x, t), w.t, w.x, x_target, steps)?;
    Ok(WaveState {
        psi: m * w.psi,
        x: x_target,
        t: w.t,
    })
}

pub fn transport_t(p: &Pipeline, w: &WaveState, t_target: f64, steps: usize) -> Result<WaveState> {
    let m = propagator_t(&|x, t| p.eval(x, t), w.x, w.t, t_target, steps)?;
    Ok(WaveState {
        psi: m * w.psi,
        x: w.x,
        t: t_target,
    })
}

/// `det [Psi_a, Psi_b]`.
pub fn wronskian(a: &Vec2, b: &Vec2) -> C64 {
    a[0] * b[1] - a[1] * b[0]
}

fn inverse(m: &Mat2) -> Result<Mat2> {
    m.try_inverse()
        .ok_or_else(|| Error::Path("singular transport matrix".into()))
}

/// `|| M_loop - I ||_F` for the loop right, up, left, down around
/// `[x0, x0 + dx] x [t0, t0 + dt]`.
pub fn plaquette_defect_with<F>(pair: &F, x0: C64, t0: f64, dx: f64, dt: f64, steps: usize) -> Result<f64>
where
    F: Fn(C64, f64) -> Result<LaxEval>,
{
    let x1 = x0 + dx;
    let t1 = t0 + dt;
    let m1 = propagator_x(pair, t0, x0, x1, steps)?;
    let m2 = propagator_t(pair, x1, t0, t1, steps)?;
    // backward legs are the inverses of the forward transports, so a
    // degenerate loop closes exactly
    let m3 = inverse(&propagator_x(pair, t1, x0, x1, steps)?)?;
    let m4 = inverse(&propagator_t(pair, x0, t0, t1, steps)?)?;
    Ok(frobenius(&(m4 * m3 * m2 * m1 - Mat2::identity())))
}

pub fn plaquette_defect(p: &Pipeline, x0: C64, t0: f64, dx: f64, dt: f64, steps: usize) -> Result<f64> {
    plaquette_defect_with(&|x, t| p.eval(x, t), x0, t0, dx, dt, steps)
}

// --- Schrodinger residual ---------------------------------------------------

/// `int_{t_start}^t H dt'` along the pipeline's motion.
pub struct HamiltonianIntegral {
    q: CumulativeIntegral,
}

impl HamiltonianIntegral {
    pub fn new(p: &Pipeline) -> Result<Self> {
        let params = *p.params();
        let g = move |s: &CalogeroState| hamiltonian(&params, s);
        Ok(Self {
            q: CumulativeIntegral::new(p.trajectory(), p.trajectory().t_start(), g)?,
        })
    }

    pub fn at(&self, p: &Pipeline, t: f64) -> Result<C64> {
        let params = *p.params();
        let g = move |s: &CalogeroState| hamiltonian(&params, s);
        self.q.at(p.trajectory(), &g, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(with = "crate::cser")]
    pub x: C64,
    #[serde(with = "crate::cser")]
    pub psi: C64,
    pub residual: f64,
    /// `|(d_x psi1 - a psi1)/b - (d_t psi1 - A psi1)/B|` relative to `max |Psi|`.
    pub var_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerReport {
    pub t: f64,
    pub dx: f64,
    pub h_t: f64,
    pub shift_applied: bool,
    pub basis: usize,
    /// `max |d_t Psi - Psi_xx/2 - V Psi| / max |Psi|` over interior points.
    pub residual: f64,
    pub var_residual: f64,
    pub points: Vec<GridPoint>,
}

/// Options for [`schrodinger_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchrodingerOptions {
    /// RK4 substeps per grid interval and for the short time legs.
    pub substeps: usize,
    /// Use the shifted quantum parameters in the potential.
    pub shift: bool,
    /// Which basis vector seeds `Psi` at the first grid point.
    pub basis: usize,
}

impl Default for SchrodingerOptions {
    fn default() -> Self {
        Self {
            substeps: 4,
            shift: true,
            basis: 0,
        }
    }
}

/// Uniform grid `x_k = x0 + k dx`, `k < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub x0: C64,
    pub dx: f64,
    pub n: usize,
}

impl UniformGrid {
    pub fn point(&self, k: usize) -> C64 {
        self.x0 + self.dx * k as f64
    }

    pub fn halved(&self) -> Self {
        Self {
            x0: self.x0,
            dx: self.dx / 2.0,
            n: 2 * self.n - 1,
        }
    }
}

/// Wave function on a uniform grid `x_k = x0 + k dx` at times
/// `t + j h_t`, `j = -2..=2`, seeded with a basis vector at `(x0, t)`.
fn grid_waves(
    p: &Pipeline,
    g: &UniformGrid,
    t: f64,
    h_t: f64,
    o: &SchrodingerOptions,
) -> Result<[Vec<Vec2>; 5]> {
    let (x0, dx, n) = (g.x0, g.dx, g.n);
    let pair = |x: C64, t: f64| p.eval(x, t);
    let seed = WaveState::basis(o.basis, x0, t).psi;
    let mut out: [Vec<Vec2>; 5] = Default::default();
    for (slot, j) in (-2i32..=2).enumerate() {
        let tt = t + j as f64 * h_t;
        let mut psi = if tt == t {
            seed
        } else {
            propagator_t(&pair, x0, t, tt, o.substeps)? * seed
        };
        let mut col = Vec::with_capacity(n);
        col.push(psi);
        for k in 1..n {
            let xa = x0 + dx * (k - 1) as f64;
            psi = propagator_x(&pair, tt, xa, xa + dx, o.substeps)? * psi;
            col.push(psi);
        }
        out[slot] = col;
    }
    Ok(out)
}

/// Residual of `d_t Psi = Psi_xx / 2 + V(x, t) Psi` for
/// `Psi = exp(int H dt) psi_1`, with a 5-point stencil in `x` and central
/// differences in `t`, plus the two-way elimination of `psi_2`.
pub fn schrodinger_residual(
    p: &Pipeline,
    hint: &HamiltonianIntegral,
    g: &UniformGrid,
    t: f64,
    h_t: f64,
    o: &SchrodingerOptions,
) -> Result<SchrodingerReport> {
    let (x0, dx, n) = (g.x0, g.dx, g.n);
    if n < 5 {
        return Err(Error::Argument("need at least 5 grid points".into()));
    }
    let waves = grid_waves(p, g, t, h_t, o)?;
    let mut fac = [c(0.0); 5];
    for (slot, j) in (-2i32..=2).enumerate() {
        fac[slot] = hint.at(p, t + j as f64 * h_t)?.exp();
    }
    let params = *p.params();
    let vp = if o.shift {
        shift_params(&params).params
    } else {
        params
    };
    let big = |slot: usize, k: usize| fac[slot] * waves[slot][k][0];
    let scale = (0..n).map(|k| big(2, k).norm()).fold(0.0, f64::max);
    let mut points = Vec::with_capacity(n);
    let (mut worst, mut worst_var) = (0.0f64, 0.0f64);
    for k in 0..n {
        let x = x0 + dx * k as f64;
        let psi = big(2, k);
        let (residual, var_residual) = if k >= 2 && k + 2 < n {
            let pxx = (-big(2, k - 2) + 16.0 * big(2, k - 1) - 30.0 * psi + 16.0 * big(2, k + 1)
                - big(2, k + 2))
                / (12.0 * dx * dx);
            let pt = (big(3, k) - big(1, k)) / (2.0 * h_t);
            let r = (pt - 0.5 * pxx - potential(&vp, x, t)? * psi).norm() / scale;
            // psi_2 elimination uses the unscaled psi_1 and 4th-order
            // stencils in both directions.
            let w = |slot: usize, j: usize| waves[slot][j][0];
            let px = (w(2, k - 2) - 8.0 * w(2, k - 1) + 8.0 * w(2, k + 1) - w(2, k + 2)) / (12.0 * dx);
            let ptt = (w(0, k) - 8.0 * w(1, k) + 8.0 * w(3, k) - w(4, k)) / (12.0 * h_t);
            let l = p.eval(x, t)?;
            let via_x = (px - l.a() * w(2, k)) / l.b();
            let via_t = (ptt - l.big_a() * w(2, k)) / l.big_b();
            let sc = waves[2].iter().map(|v| v.norm()).fold(0.0, f64::max);
            let v = (via_x - via_t).norm() / sc;
            worst = worst.max(r);
            worst_var = worst_var.max(v);
            (r, v)
        } else {
            (f64::NAN, f64::NAN)
        };
        points.push(GridPoint {
            x,
            psi,
            residual,
            var_residual,
        });
    }
    Ok(SchrodingerReport {
        t,
        dx,
        h_t,
        shift_applied: o.shift,
        basis: o.basis,
        residual: worst,
        var_residual: worst_var,
        points,
    })
}

/// `max |psi_xx / 2 - (d_x log b) psi_x / 2 + W psi| / max |psi|` for
/// `psi = psi_1` at fixed `t` on the interior of the grid.
pub fn stationary_residual(p: &Pipeline, g: &UniformGrid, t: f64, h_t: f64, o: &SchrodingerOptions) -> Result<f64> {
    if g.n < 5 {
        return Err(Error::Argument("need at least 5 grid points".into()));
    }
    let pair = |x: C64, t: f64| p.eval(x, t);
    let mut psi = vec![WaveState::basis(o.basis, g.x0, t).psi];
    for k in 1..g.n {
        let xa = g.point(k - 1);
        let m = propagator_x(&pair, t, xa, xa + g.dx, o.substeps)?;
        psi.push(m * psi[k - 1]);
    }
    let f: Vec<C64> = psi.iter().map(|v| v[0]).collect();
    let scale = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dx = g.dx;
    let mut worst = 0.0f64;
    for k in 2..g.n - 2 {
        let x = g.point(k);
        let fx = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * dx);
        let fxx = (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]) / (12.0 * dx * dx);
        let l = p.eval(x, t)?;
        let w = crate::correspondence::stationary_reduction(p, x, t, h_t)?.w;
        let r = 0.5 * fxx - 0.5 * l.b_x() / l.b() * fx + w * f[k];
        worst = worst.max(r.norm() / scale);
    }
    Ok(worst)
}

/// CSV `x,re_psi,im_psi,residual`; `x` is the real part of the grid point
/// and boundary points without full stencil support have an empty residual.
pub fn write_sweep_csv<W: Write>(r: &SchrodingerReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "re_psi", "im_psi", "residual"])?;
    for g in &r.points {
        let res = if g.residual.is_nan() {
            String::new()
        } else {
            cell(g.residual)
        };
        wr.write_record([
            cell(g.x.re),
            cell(g.psi.re),
            cell(g.psi.im),
            res,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

// --- gauge consistency ----------------------------------------------------------

fn sqrt_near(z2: C64, prev: C64) -> C64 {
    let s = z2.sqrt();
    if (s - prev).norm() <= (s + prev).norm() {
        s
    } else {
        -s
    }
}

/// Transport along `x` with the pre-gauge pair, then conjugate by
/// `diag(w, 1/w)`, with `w` continued along the path. Returns the
/// propagator comparable to [`propagator_x`] of the gauged pair.
pub fn gauged_propagator_x(p: &Pipeline, t: f64, x0: C64, x1: C64, steps: usize) -> Result<Mat2> {
    let pre = |x: C64, t: f64| Ok::<_, Error>(p.eval_pre_gauge(x, t)?.0);
    let m = propagator_x(&pre, t, x0, x1, steps)?;
    let g0: GaugeFactor = p.eval_pre_gauge(x0, t)?.1;
    let mut w = g0.omega2.sqrt();
    let w0 = w;
    for k in 1..=steps {
        let x = x0 + (x1 - x0) * (k as f64 / steps as f64);
        w = sqrt_near(p.eval_pre_gauge(x, t)?.1.omega2, w);
    }
    let om = |w: C64| Mat2::new(w, c(0.0), c(0.0), 1.0 / w);
    Ok(om(w) * m * om(1.0 / w0))
}

/// Same along `t` at fixed `x`.
pub fn gauged_propagator_t(p: &Pipeline, x: C64, t0: f64, t1: f64, steps: usize) -> Result<Mat2> {
    let pre = |x: C64, t: f64| Ok::<_, Error>(p.eval_pre_gauge(x, t)?.0);
    let m = propagator_t(&pre, x, t0, t1, steps)?;
    let mut w = p.eval_pre_gauge(x, t0)?.1.omega2.sqrt();
    let w0 = w;
    for k in 1..=steps {
        let t = t0 + (t1 - t0) * (k as f64 / steps as f64);
        w = sqrt_near(p.eval_pre_gauge(x, t)?.1.omega2, w);
    }
    let om = |w: C64| Mat2::new(w, c(0.0), c(0.0), 1.0 / w);
    Ok(om(w) * m * om(1.0 / w0))
}
