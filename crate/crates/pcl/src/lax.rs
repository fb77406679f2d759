//! 2x2 Lax pairs `(U, V)` for every kind, built from the Calogero state and
//! reconstructed auxiliary variables, plus the zero-curvature residual
//! `d_t U - d_x V + [U, V]`.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CalogeroState, P3Constants, P5Constants, P6Constants, PainleveKind, ParamSet};
use crate::elliptic::{Elliptic, ModularParam, ThetaIndex, C64};
use crate::error::{ensure_finite, Error, Result};
use crate::integrate::{CumulativeIntegral, Trajectory};

pub type Mat2 = Matrix2<C64>;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn traceless(a: C64, b: C64, cc: C64) -> Mat2 {
    Mat2::new(a, b, cc, -a)
}

/// `U`, `V` and the x-derivative of `U` at one point `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaxEval {
    pub x: C64,
    pub t: f64,
    pub um: Mat2,
    pub vm: Mat2,
    /// `d_x U`, analytic for every kind.
    pub um_x: Mat2,
}

impl LaxEval {
    pub fn a(&self) -> C64 {
        self.um[(0, 0)]
    }
    pub fn b(&self) -> C64 {
        self.um[(0, 1)]
    }
    pub fn c(&self) -> C64 {
        self.um[(1, 0)]
    }
    pub fn big_a(&self) -> C64 {
        self.vm[(0, 0)]
    }
    pub fn big_b(&self) -> C64 {
        self.vm[(0, 1)]
    }
    pub fn big_c(&self) -> C64 {
        self.vm[(1, 0)]
    }
    pub fn a_x(&self) -> C64 {
        self.um_x[(0, 0)]
    }
    pub fn b_x(&self) -> C64 {
        self.um_x[(0, 1)]
    }

    /// `b_x - 2B`, zero under the normalization used throughout.
    pub fn bx_defect(&self) -> C64 {
        self.b_x() - 2.0 * self.big_b()
    }

    pub fn det_u(&self) -> C64 {
        self.um.determinant()
    }
}

/// Diagonal gauge `Psi -> diag(w, 1/w) Psi` given by `w^2` and the
/// derivatives of `log w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeFactor {
    pub omega2: C64,
    pub dx_log: C64,
    pub dxx_log: C64,
    pub dt_log: C64,
}

impl GaugeFactor {
    pub fn identity() -> Self {
        Self {
            omega2: c(1.0),
            dx_log: c(0.0),
            dxx_log: c(0.0),
            dt_log: c(0.0),
        }
    }
}

/// Apply a diagonal gauge to a pair.
pub fn apply_gauge(l: &LaxEval, g: &GaugeFactor) -> LaxEval {
    let w2 = g.omega2;
    let (a, b, cc) = (l.a(), l.b(), l.c());
    let (ax, bx, cx) = (l.um_x[(0, 0)], l.um_x[(0, 1)], l.um_x[(1, 0)]);
    LaxEval {
        x: l.x,
        t: l.t,
        um: traceless(a + g.dx_log, w2 * b, cc / w2),
        vm: traceless(l.big_a() + g.dt_log, w2 * l.big_b(), l.big_c() / w2),
        um_x: traceless(
            ax + g.dxx_log,
            w2 * (bx + 2.0 * g.dx_log * b),
            (cx - 2.0 * g.dx_log * cc) / w2,
        ),
    }
}

// --- auxiliary variables --------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P3Aux {
    pub f: C64,
    pub df: C64,
    pub g11: C64,
    pub g12: C64,
    pub g21: C64,
    pub v: C64,
    pub w: C64,
    pub consts: P3Constants,
}

impl P3Aux {
    /// `g11^2 + g12 g21`, conserved and equal to `chi`.
    pub fn chi(&self) -> C64 {
        self.g11 * self.g11 + self.g12 * self.g21
    }

    /// `v g21 + w g12 + theta g11`, conserved and equal to `lambda`.
    pub fn lambda(&self) -> C64 {
        self.v * self.g21 + self.w * self.g12 + self.consts.theta * self.g11
    }

    /// Right-hand sides of the five first-order equations, ordered
    /// `(g11, g12, g21, v, w)`.
    pub fn rates(&self, t: f64) -> [C64; 5] {
        let th = self.consts.theta;
        let e2t = c((2.0 * t).exp());
        [
            2.0 * (self.v * self.g21 - self.w * self.g12),
            th * self.g12 - 4.0 * self.v * self.g11,
            -th * self.g21 + 4.0 * self.w * self.g11,
            -th * self.v - self.g12 * e2t,
            th * self.w + self.g21 * e2t,
        ]
    }

    pub fn values(&self) -> [C64; 5] {
        [self.g11, self.g12, self.g21, self.v, self.w]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P5Aux {
    pub y: C64,
    pub g: C64,
    pub v: C64,
    pub w: C64,
    pub v1: C64,
    pub w1: C64,
    pub consts: P5Constants,
}

impl P5Aux {
    /// `(v v1 + g^2, w w1 + g(g + 2 sigma))`, conserved and equal to
    /// `(zeta^2, xi^2 + 2 xi sigma)`.
    pub fn integrals(&self) -> [C64; 2] {
        let s = self.consts.sigma;
        [
            self.v * self.v1 + self.g * self.g,
            self.w * self.w1 + self.g * (self.g + 2.0 * s),
        ]
    }

    /// Right-hand sides ordered `(g, v, w, v1, w1)`.
    pub fn rates(&self, t: f64) -> [C64; 5] {
        let s = self.consts.sigma;
        let e2t = c((2.0 * t).exp());
        let (g, v, w, v1, w1) = (self.g, self.v, self.w, self.v1, self.w1);
        [
            2.0 * (v * w1 - w * v1),
            -4.0 * (v - w) * g,
            -4.0 * (v - w) * (g + s) + 2.0 * w * e2t,
            4.0 * (v1 - w1) * g,
            4.0 * (v1 - w1) * (g + s) - 2.0 * w1 * e2t,
        ]
    }

    pub fn values(&self) -> [C64; 5] {
        [self.g, self.v, self.w, self.v1, self.w1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P6Aux {
    pub k: C64,
    /// `d_t log K`.
    pub dlog_k: C64,
    pub y: C64,
    /// The rational time `T = (e3 - e1) / (e2 - e1)`.
    pub big_t: C64,
    pub y_t: C64,
    pub z: C64,
    pub g: [C64; 3],
    pub ug: [C64; 3],
    pub ui: [C64; 3],
    pub consts: P6Constants,
}

impl P6Aux {
    pub fn poles(&self) -> [C64; 3] {
        [c(0.0), c(1.0), self.big_t]
    }

    /// Residuals of `sum g_i = xi_3`, `sum u_i g_i = 0`,
    /// `sum (g_i + 2 xi_i) / u_i = 0`.
    pub fn constraints(&self) -> [C64; 3] {
        let xi = &self.consts.xi_i;
        let mut s = [-xi[3], c(0.0), c(0.0)];
        for i in 0..3 {
            s[0] += self.g[i];
            s[1] += self.ug[i];
            s[2] += (self.g[i] + 2.0 * xi[i]) / self.ui[i];
        }
        s
    }

    /// `sum (g_i + xi_i) / (y - y_i)`, equal to `z`.
    pub fn a_of_y(&self) -> C64 {
        let p = self.poles();
        (0..3)
            .map(|i| (self.g[i] + self.consts.xi_i[i]) / (self.y - p[i]))
            .sum()
    }

    /// `c_i = (g_i + 2 xi_i) / u_i`.
    pub fn ci(&self) -> [C64; 3] {
        let xi = &self.consts.xi_i;
        [0, 1, 2].map(|i| (self.g[i] + 2.0 * xi[i]) / self.ui[i])
    }

    /// `(u_0 g_0, u_1 g_1, g_0, g_1, c_0, c_1)`.
    pub fn t_values(&self) -> [C64; 6] {
        let ci = self.ci();
        [self.ug[0], self.ug[1], self.g[0], self.g[1], ci[0], ci[1]]
    }

    /// Derivatives of [`Self::t_values`] with respect to `T`.
    pub fn t_rates(&self) -> [C64; 6] {
        let (g, u, x) = (&self.g, &self.ui, &self.consts.xi_i);
        let tt = self.big_t;
        let t1 = tt - 1.0;
        let (ug0, ug1) = (u[0] * g[0], u[1] * g[1]);
        [
            (2.0 * ug0 * (g[0] + g[2] + x[0] + x[2]) + 2.0 * ug1 * (g[0] + x[0])) / tt,
            (2.0 * ug1 * (g[1] + g[2] + x[1] + x[2]) + 2.0 * ug0 * (g[1] + x[1])) / t1,
            (u[0] / u[2] * g[0] * (g[2] + 2.0 * x[2]) - u[2] / u[0] * g[2] * (g[0] + 2.0 * x[0])) / tt,
            (u[1] / u[2] * g[1] * (g[2] + 2.0 * x[2]) - u[2] / u[1] * g[2] * (g[1] + 2.0 * x[1])) / t1,
            -(2.0 / u[0] * (g[0] + 2.0 * x[0]) * (g[2] + x[2])
                - 2.0 / u[2] * (g[2] + 2.0 * x[2]) * (g[0] + x[0]))
                / tt,
            -(2.0 / u[1] * (g[1] + 2.0 * x[1]) * (g[2] + x[2])
                - 2.0 / u[2] * (g[2] + 2.0 * x[2]) * (g[1] + x[1]))
                / t1,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxState {
    None,
    P3(P3Aux),
    P5(P5Aux),
    P6(P6Aux),
}

fn degenerate(what: &str, z: C64) -> Result<C64> {
    if z.norm() <= 1e-300 || !z.is_finite() {
        return Err(Error::Degeneracy(format!("{what} vanishes or is not finite")));
    }
    Ok(z)
}

fn p3_g11(k: &P3Constants, s: &CalogeroState) -> Result<(C64, C64, C64)> {
    let f = degenerate("f", (-2.0 * s.u + s.t).exp())?;
    let df = (1.0 - 2.0 * s.du) * f;
    let g = (df + 2.0 * k.theta * f + (2.0 * s.t).exp()) / (4.0 * f * f);
    Ok((f, df, g))
}

pub fn p3_aux(params: &ParamSet, s: &CalogeroState, g12: C64) -> Result<P3Aux> {
    let k = params.p3_constants()?;
    let (f, df, g11) = p3_g11(&k, s)?;
    let g12 = degenerate("g12", g12)?;
    let v = f * g12;
    let g21 = (k.chi - g11 * g11) / g12;
    let w = (k.lambda - k.theta * g11 - v * g21) / g12;
    Ok(P3Aux {
        f,
        df,
        g11,
        g12,
        g21,
        v,
        w,
        consts: k,
    })
}

fn p5_y_g(k: &P5Constants, s: &CalogeroState) -> Result<(C64, C64)> {
    let (sh, ch) = (s.u.sinh(), s.u.cosh());
    degenerate("sinh u", sh)?;
    degenerate("cosh u", ch)?;
    let y = (ch * ch) / (sh * sh);
    let e2t = (2.0 * s.t).exp();
    let g = -0.5 * s.du * sh * ch + 0.5 * e2t * sh * sh * ch * ch - k.sigma * ch * ch;
    Ok((y, g))
}

pub fn p5_aux(params: &ParamSet, s: &CalogeroState, v: C64) -> Result<P5Aux> {
    let k = params.p5_constants()?;
    let (y, g) = p5_y_g(&k, s)?;
    let v = degenerate("v", v)?;
    let w = v / y;
    let xs = k.xi + k.sigma;
    Ok(P5Aux {
        y,
        g,
        v,
        w,
        v1: (k.zeta - g) * (k.zeta + g) / v,
        w1: (xs * xs - (g + k.sigma) * (g + k.sigma)) / w,
        consts: k,
    })
}

pub fn p6_elliptic(t: f64) -> Result<Elliptic> {
    Ok(Elliptic::new(&ModularParam::from_time(c(t))?))
}

/// `y`, `T`, `e2 - e1` at a state.
fn p6_y_t(ell: &Elliptic, s: &CalogeroState) -> Result<(C64, C64, C64)> {
    let (e1, e2, e3) = (ell.e(1), ell.e(2), ell.e(3));
    let d = e2 - e1;
    let y = (ell.wp(s.u)? - e1) / d;
    Ok((y, (e3 - e1) / d, d))
}

fn p6_dlog_k(ell: &Elliptic, k: &P6Constants, s: &CalogeroState) -> Result<C64> {
    let (y, tt, d) = p6_y_t(ell, s)?;
    Ok(-2.0 * d * (2.0 * k.xi + 1.0) * (y - tt))
}

pub fn p6_aux(params: &ParamSet, s: &CalogeroState, kk: C64) -> Result<P6Aux> {
    let ell = p6_elliptic(s.t)?;
    p6_aux_with(&ell, &params.p6_constants()?, s, kk)
}

fn p6_aux_with(ell: &Elliptic, k: &P6Constants, s: &CalogeroState, kk: C64) -> Result<P6Aux> {
    let (y, tt, d) = p6_y_t(ell, s)?;
    for (p, name) in [(c(0.0), "0"), (c(1.0), "1"), (tt, "T")] {
        if (y - p).norm() < 1e-12 {
            return Err(Error::Branch(format!("y hits the branch point {name}")));
        }
    }
    let xi = k.xi;
    if xi.norm() < 1e-14 {
        return Err(Error::Degeneracy("xi = 0".into()));
    }
    let [x0, x1, x2, _] = k.xi_i;
    let l0 = ell.log_deriv(ThetaIndex::ZERO, s.u);
    let y_t = ell.wp_prime(s.u)? / (2.0 * tt * (tt - 1.0) * d * d) * (s.du + l0);
    let z = 0.5 * (tt * (tt - 1.0) * y_t / (y * (y - 1.0) * (y - tt)) - 1.0 / (y - tt));

    let t1 = tt - 1.0;
    let g0c = t1 / 4.0 - xi * (xi * tt + xi + 1.0);
    let g1c = t1 / 4.0 - xi * xi * t1;
    let g2c = t1 / 4.0 + xi * (xi + 1.0) * t1;
    let a0 = t1 * t1 / 4.0 * y_t * y_t;
    let a1 = tt * tt / 4.0 * y_t * y_t;
    let a2 = (y_t - 1.0) * (y_t - 1.0) / 4.0;
    let xh = (xi + 0.5) * (xi + 0.5);
    let g0 = y / (2.0 * xi)
        * (-xh / tt * y - g0c / tt - (a0 - xi * t1 * y_t + x0 * (2.0 * xi - x0)) / y
            + t1 / (tt * (y - 1.0)) * (a1 - x1 * x1)
            - t1 / (y - tt) * (a2 - x2 * x2));
    let g1 = (y - 1.0) / (2.0 * xi)
        * (xh / t1 * y + g1c / t1 + tt / (t1 * y) * (a0 - x0 * x0)
            + (-a1 - xi * tt * y_t + x1 * (x1 - 2.0 * xi)) / (y - 1.0)
            + tt / (y - tt) * (a2 - x2 * x2));
    let g2 = (y - tt) / (2.0 * xi)
        * (-xh / (tt * t1) * y - g2c / (tt * t1) - (a0 - x0 * x0) / (t1 * y)
            + (a1 - x1 * x1) / (tt * (y - 1.0))
            - (a2 - xi * (y_t - 1.0) + x2 * (2.0 * xi - x2)) / (y - tt));
    let g = [g0, g1, g2];
    let ug = [
        kk * y / tt,
        -kk * (y - 1.0) / t1,
        kk * (y - tt) / (tt * t1),
    ];
    let mut ui = [c(0.0); 3];
    for i in 0..3 {
        degenerate("g_i", g[i])?;
        ui[i] = ug[i] / g[i];
    }
    Ok(P6Aux {
        k: kk,
        dlog_k: -2.0 * d * (2.0 * xi + 1.0) * (y - tt),
        y,
        big_t: tt,
        y_t,
        z,
        g,
        ug,
        ui,
        consts: *k,
    })
}

/// `d/dt` of the logarithm of the integrated auxiliary scale:
/// `g12` for P3, `v` for P5, `K` for P6. Zero for the other kinds.
pub fn aux_log_rate(params: &ParamSet, s: &CalogeroState) -> Result<C64> {
    match params {
        ParamSet::P3 { .. } => {
            let k = params.p3_constants()?;
            let (f, _, g) = p3_g11(&k, s)?;
            Ok(k.theta - 4.0 * f * g)
        }
        ParamSet::P5 { .. } => {
            let k = params.p5_constants()?;
            let (y, g) = p5_y_g(&k, s)?;
            Ok(-4.0 * (1.0 - 1.0 / y) * g)
        }
        ParamSet::P6 { .. } => {
            let ell = p6_elliptic(s.t)?;
            p6_dlog_k(&ell, &params.p6_constants()?, s)
        }
        _ => Ok(c(0.0)),
    }
}

// --- builders ---------------------------------------------------------------

pub fn build_p1(s: &CalogeroState, x: C64) -> LaxEval {
    let (u, du, t) = (s.u, s.du, s.t);
    LaxEval {
        x,
        t,
        um: traceless(du, x - u, x * x + x * u + u * u + t / 2.0),
        vm: traceless(c(0.0), c(0.5), x / 2.0 + u),
        um_x: traceless(c(0.0), c(1.0), 2.0 * x + u),
    }
}

pub fn build_p2(s: &CalogeroState, alpha: C64, x: C64) -> LaxEval {
    let (u, du, t) = (s.u, s.du, s.t);
    let r = 2.0 * u * u - 2.0 * du + t;
    LaxEval {
        x,
        t,
        um: traceless(x * x + du - u * u, x - u, (x + u) * r - 2.0 * alpha - 1.0),
        vm: traceless((x + u) / 2.0, c(0.5), u * u - du + t / 2.0),
        um_x: traceless(2.0 * x, c(1.0), r),
    }
}

pub fn build_p4(s: &CalogeroState, alpha: C64, beta: C64, x: C64) -> Result<LaxEval> {
    let (u, du, t) = (s.u, s.du, s.t);
    if x.norm() < 1e-12 || u.norm() < 1e-12 {
        return Err(Error::Pole {
            what: "P4 pair".into(),
            at: if x.norm() < 1e-12 { x } else { u },
        });
    }
    let q = u * du - u.powi(4) / 2.0 - t * u * u;
    let (x2, u2) = (x * x, u * u);
    let a = x * x2 / 2.0 + t * x + (q + 0.5) / x;
    let r = (q * q + beta / 2.0) / u2;
    Ok(LaxEval {
        x,
        t,
        um: traceless(a, x2 - u2, r / x2 - q - alpha - 1.0),
        vm: traceless((x2 + u2) / 2.0 + t, x, -(q + alpha + 1.0) / x),
        um_x: traceless(1.5 * x2 + t - (q + 0.5) / x2, 2.0 * x, -2.0 * r / (x2 * x)),
    })
}

pub fn build_p3_truncated(s: &CalogeroState, nu: C64, x: C64) -> LaxEval {
    let (u, du, t) = (s.u, s.du, s.t);
    let k = nu * (t / 2.0).exp();
    LaxEval {
        x,
        t,
        um: traceless(du, 2.0 * k * (x - u).sinh(), 2.0 * k * (x + u).sinh()),
        vm: traceless(c(0.0), k * (x - u).cosh(), k * (x + u).cosh()),
        um_x: traceless(c(0.0), 2.0 * k * (x - u).cosh(), 2.0 * k * (x + u).cosh()),
    }
}

/// The `h` entry of the general P3 pair.
pub fn p3_h(aux: &P3Aux, t: f64) -> C64 {
    aux.df / (4.0 * aux.f) + (2.0 * t).exp() / (2.0 * aux.f) + aux.consts.theta / 2.0
}

pub fn build_p3(s: &CalogeroState, aux: &P3Aux, x: C64) -> Result<LaxEval> {
    let t = s.t;
    let f_expect = (-2.0 * s.u + t).exp();
    if (aux.f - f_expect).norm() > 1e-10 * f_expect.norm() {
        return Err(Error::Consistency("P3 aux does not match the state".into()));
    }
    // f^{1/2} = e^{-u + t/2} fixes the branch.
    let sf = (-s.u + t / 2.0).exp();
    let svg = aux.g12 * sf;
    let (ep, em, em3) = ((2.0 * x + t).exp(), (-2.0 * x + t).exp(), (-3.0 * x + t).exp());
    let (ex, emx) = (x.exp(), (-x + t).exp());
    let (g11, g21, w) = (aux.g11, aux.g21, aux.w);
    let th = aux.consts.theta;
    let a = ep / 2.0 - 2.0 * g11 * em + th + 0.5;
    let b = sf * ex - emx / sf;
    let cc = 4.0 * svg * (w * (-x).exp() - g21 * em3);
    let big_a = ep / 4.0 + g11 * em + p3_h(aux, t);
    let big_b = (sf * ex + emx / sf) / 2.0;
    let big_c = 2.0 * svg * (w * (-x).exp() + g21 * em3);
    Ok(LaxEval {
        x,
        t,
        um: traceless(a, b, cc),
        vm: traceless(big_a, big_b, big_c),
        um_x: traceless(
            ep + 4.0 * g11 * em,
            sf * ex + emx / sf,
            4.0 * svg * (-w * (-x).exp() + 3.0 * g21 * em3),
        ),
    })
}

fn p5_x_guard(x: C64) -> Result<()> {
    if x.sinh().norm() < 1e-12 || x.cosh().norm() < 1e-12 {
        return Err(Error::Pole {
            what: "P5 pair".into(),
            at: x,
        });
    }
    Ok(())
}

/// The P5 pair in the gauge where `b_x = 2B`.
pub fn build_p5(s: &CalogeroState, aux: &P5Aux, x: C64) -> Result<LaxEval> {
    p5_x_guard(x)?;
    let t = s.t;
    let (g, v, w, v1, w1) = (aux.g, aux.v, aux.w, aux.v1, aux.w1);
    let sg = aux.consts.sigma;
    let (sh, ch) = (x.sinh(), x.cosh());
    let (sh2, ch2) = (sh * sh, ch * ch);
    let (et, e2t) = (c(t.exp()), c((2.0 * t).exp()));
    let p = 2.0 * g + 0.5;
    let m = 2.0 * g + 2.0 * sg - 0.5;
    let a = e2t * sh * ch + p * sh / ch - m * ch / sh;
    let b = 2.0 * et * (v * sh2 - w * ch2) / (v - w);
    let cc = 2.0 * (v - w) / et * (v1 / ch2 - w1 / sh2);
    let su = s.u.sinh();
    let big_a = e2t * (ch2 + su * su) - 2.0 * sg + 0.5;
    let s2x = (2.0 * x).sinh();
    Ok(LaxEval {
        x,
        t,
        um: traceless(a, b, cc),
        vm: traceless(big_a, et * s2x, 4.0 * (v - w) * (v1 - w1) / (et * s2x)),
        um_x: traceless(
            e2t * (2.0 * x).cosh() + p / ch2 + m / sh2,
            2.0 * et * s2x,
            2.0 * (v - w) / et * (-2.0 * v1 * sh / (ch2 * ch) + 2.0 * w1 * ch / (sh2 * sh)),
        ),
    })
}

/// The P5 pair before the diagonal gauge, and the gauge taking it to
/// [`build_p5`].
pub fn build_p5_pre_gauge(s: &CalogeroState, aux: &P5Aux, x: C64) -> Result<(LaxEval, GaugeFactor)> {
    p5_x_guard(x)?;
    let t = s.t;
    let (g, v, w, v1, w1) = (aux.g, aux.v, aux.w, aux.v1, aux.w1);
    let sg = aux.consts.sigma;
    let (sh, ch) = (x.sinh(), x.cosh());
    let (th, cth) = (sh / ch, ch / sh);
    let (sh2, ch2) = (sh * sh, ch * ch);
    let e2t = c((2.0 * t).exp());
    let a = e2t * sh * ch + 2.0 * g * th - (2.0 * g + 2.0 * sg) * cth;
    let pre = LaxEval {
        x,
        t,
        um: traceless(a, 2.0 * v * th - 2.0 * w * cth, 2.0 * v1 * th - 2.0 * w1 * cth),
        vm: traceless(e2t * ch2, 2.0 * (v - w), 2.0 * (v1 - w1)),
        um_x: traceless(
            e2t * (2.0 * x).cosh() + 2.0 * g / ch2 + (2.0 * g + 2.0 * sg) / sh2,
            2.0 * v / ch2 + 2.0 * w / sh2,
            2.0 * v1 / ch2 + 2.0 * w1 / sh2,
        ),
    };
    let gauge = GaugeFactor {
        omega2: t.exp() * sh * ch / (v - w),
        dx_log: 0.5 * (cth + th),
        dxx_log: 0.5 * (1.0 / ch2 - 1.0 / sh2),
        dt_log: 0.5 * (1.0 - 4.0 * sg + 2.0 * w * e2t / (v - w)),
    };
    Ok((pre, gauge))
}

/// Normalization of the P6 gauge function `rho(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoChoice {
    /// `rho = theta_1'(0)^{1/3} theta_1(u) / (theta_0(0)^3 sqrt K)`; the
    /// x-independent part of the potential is then exactly `-H`.
    #[default]
    Balanced,
    /// `rho = theta_1'(0)^{1/3} theta_1(u) / sqrt K`; leaves the constant
    /// `3 d_t log theta_0(0)` in the potential.
    Plain,
}

/// `rho^2` for the chosen normalization.
pub fn p6_rho2(ell: &Elliptic, u: C64, k: C64, rho: RhoChoice) -> C64 {
    let t1 = ell.theta(ThetaIndex::ONE, u);
    let base = ell.theta1_prime0().powf(2.0 / 3.0) * t1 * t1 / k;
    match rho {
        RhoChoice::Plain => base,
        RhoChoice::Balanced => base / ell.theta_const(ThetaIndex::ZERO).powi(6),
    }
}

/// Rational-coordinate pair pushed to the elliptic coordinate `x`, without gauge.
fn p6_rational(ell: &Elliptic, aux: &P6Aux, x: C64, t: f64) -> Result<LaxEval> {
    let (e1, e2) = (ell.e(1), ell.e(2));
    let d = e2 - e1;
    let tt = aux.big_t;
    let xx = (ell.wp(x)? - e1) / d;
    let x_x = ell.wp_prime(x)? / d;
    let x_xx = ell.wp_second(x)? / d;
    let x_t = x_x * ell.log_deriv(ThetaIndex::ZERO, x);
    let t_t = 2.0 * d * tt * (tt - 1.0);
    let p = aux.poles();
    let xi = &aux.consts.xi_i;
    let ci = aux.ci();
    let (mut ra, mut rb, mut rc) = (c(0.0), c(0.0), c(0.0));
    let (mut da, mut db, mut dc) = (c(0.0), c(0.0), c(0.0));
    for i in 0..3 {
        let r = 1.0 / (xx - p[i]);
        if !r.is_finite() {
            return Err(Error::Pole {
                what: "P6 rational pair".into(),
                at: x,
            });
        }
        let al = aux.g[i] + xi[i];
        ra += al * r;
        rb -= aux.ug[i] * r;
        rc += ci[i] * r;
        da -= al * r * r;
        db += aux.ug[i] * r * r;
        dc -= ci[i] * r * r;
    }
    let rt = 1.0 / (xx - tt);
    let al2 = aux.g[2] + xi[2];
    let ru = traceless(ra, rb, rc);
    let rv = traceless(-al2 * rt, aux.ug[2] * rt, -ci[2] * rt);
    let rdu = traceless(da, db, dc);
    Ok(LaxEval {
        x,
        t,
        um: ru * x_x,
        vm: rv * t_t + ru * x_t,
        um_x: ru * x_xx + rdu * (x_x * x_x),
    })
}

fn p6_gauge(ell: &Elliptic, s: &CalogeroState, aux: &P6Aux, x: C64, rho: RhoChoice) -> GaugeFactor {
    let half = |a: ThetaIndex, z: C64| {
        let j = ell.jet(a, z);
        (j[1] / j[0], j[2] / j[0])
    };
    let (l1, h1) = half(ThetaIndex::ONE, x);
    let (l2, h2) = half(ThetaIndex::TWO, x);
    let (l3, h3) = half(ThetaIndex::THREE, x);
    let (l0, h0) = half(ThetaIndex::ZERO, x);
    let th = |a| ell.theta(a, x);
    let cst = |a| ell.theta_const(a);
    let cdd = |a| ell.theta_const_dd(a) / ell.theta_const(a);
    let t1p = ell.theta1_prime0();
    let r3 = ell.theta1_third0() / t1p;

    let pre = -t1p * cst(ThetaIndex::ZERO) / (cst(ThetaIndex::TWO) * cst(ThetaIndex::THREE));
    let omega2 = pre * th(ThetaIndex::TWO) * th(ThetaIndex::THREE) * th(ThetaIndex::ZERO)
        / th(ThetaIndex::ONE)
        * p6_rho2(ell, s.u, aux.k, rho);

    let dx_log2 = l2 + l3 + l0 - l1;
    let dxx_log2 = (h2 - l2 * l2) + (h3 - l3 * l3) + (h0 - l0 * l0) - (h1 - l1 * l1);
    // d_t log theta = theta'' / (2 theta) at fixed argument.
    let ju = ell.jet(ThetaIndex::ONE, s.u);
    let mut dt_rho2 = r3 / 3.0 + 2.0 * (s.du * ju[1] / ju[0] + 0.5 * ju[2] / ju[0]) - aux.dlog_k;
    if rho == RhoChoice::Balanced {
        dt_rho2 -= 3.0 * cdd(ThetaIndex::ZERO);
    }
    let dt_log2 = 0.5 * r3 + 0.5 * cdd(ThetaIndex::ZERO)
        - 0.5 * cdd(ThetaIndex::TWO)
        - 0.5 * cdd(ThetaIndex::THREE)
        + 0.5 * (h2 + h3 + h0 - h1)
        + dt_rho2;
    GaugeFactor {
        omega2,
        dx_log: dx_log2 / 2.0,
        dxx_log: dxx_log2 / 2.0,
        dt_log: dt_log2 / 2.0,
    }
}

/// The P6 pair before the gauge, and the gauge.
pub fn build_p6_pre_gauge(
    ell: &Elliptic,
    s: &CalogeroState,
    aux: &P6Aux,
    x: C64,
    rho: RhoChoice,
) -> Result<(LaxEval, GaugeFactor)> {
    let pre = p6_rational(ell, aux, x, s.t)?;
    Ok((pre, p6_gauge(ell, s, aux, x, rho)))
}

pub fn build_p6(ell: &Elliptic, s: &CalogeroState, aux: &P6Aux, x: C64, rho: RhoChoice) -> Result<LaxEval> {
    let (pre, g) = build_p6_pre_gauge(ell, s, aux, x, rho)?;
    Ok(apply_gauge(&pre, &g))
}

/// Closed form `b = 2K(e2 - e1) rho^2 theta_0(x)^2 (wp(x) - wp(u)) / (wp(x) - e3)`.
pub fn p6_b_closed(ell: &Elliptic, s: &CalogeroState, aux: &P6Aux, x: C64, rho: RhoChoice) -> Result<C64> {
    let (e1, e2, e3) = (ell.e(1), ell.e(2), ell.e(3));
    let wx = ell.wp(x)?;
    let t0 = ell.theta(ThetaIndex::ZERO, x);
    Ok(2.0 * aux.k * (e2 - e1) * p6_rho2(ell, s.u, aux.k, rho) * t0 * t0 * (wx - ell.wp(s.u)?)
        / (wx - e3))
}

/// Gauge function in the wp-form `wp'(x) theta_0(x)^2 rho^2 / (2 (wp(x) - e3))`.
pub fn p6_omega2_wp_form(ell: &Elliptic, s: &CalogeroState, aux: &P6Aux, x: C64, rho: RhoChoice) -> Result<C64> {
    let t0 = ell.theta(ThetaIndex::ZERO, x);
    Ok(ell.wp_prime(x)? * t0 * t0 / (2.0 * (ell.wp(x)? - ell.e(3)))
        * p6_rho2(ell, s.u, aux.k, rho))
}

/// Gauge function in the closed theta form with `theta_1'(0)^{5/3}` and
/// `rho = theta_1'(0)^{1/3} theta_1(u) / sqrt K`.
pub fn p6_omega2_theta_form(ell: &Elliptic, s: &CalogeroState, aux: &P6Aux, x: C64) -> C64 {
    let th = |a| ell.theta(a, x);
    let cst = |a| ell.theta_const(a);
    let t1u = ell.theta(ThetaIndex::ONE, s.u);
    ell.theta1_prime0().powf(5.0 / 3.0) * cst(ThetaIndex::ZERO)
        / (cst(ThetaIndex::TWO) * cst(ThetaIndex::THREE))
        * th(ThetaIndex::TWO)
        * th(ThetaIndex::THREE)
        * th(ThetaIndex::ZERO)
        * t1u
        * t1u
        / (th(ThetaIndex::ONE) * aux.k)
}

/// Dispatch on the parameter kind. `aux` must match the kind.
pub fn build(params: &ParamSet, s: &CalogeroState, aux: &AuxState, x: C64, rho: RhoChoice) -> Result<LaxEval> {
    ensure_finite("x", x)?;
    let wrong = || Error::Consistency(format!("aux state does not match {}", params.kind()));
    match (*params, aux) {
        (ParamSet::P1, _) => Ok(build_p1(s, x)),
        (ParamSet::P2 { alpha }, _) => Ok(build_p2(s, alpha, x)),
        (ParamSet::P3Truncated { nu }, _) => Ok(build_p3_truncated(s, nu, x)),
        (ParamSet::P4 { alpha, beta }, _) => build_p4(s, alpha, beta, x),
        (ParamSet::P3 { .. }, AuxState::P3(a)) => build_p3(s, a, x),
        (ParamSet::P5 { .. }, AuxState::P5(a)) => build_p5(s, a, x),
        (ParamSet::P6 { .. }, AuxState::P6(a)) => build_p6(&p6_elliptic(s.t)?, s, a, x, rho),
        _ => Err(wrong()),
    }
}

// --- pipeline ---------------------------------------------------------------

/// Initial values of the integrated auxiliary scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxSeeds {
    #[serde(with = "crate::cser")]
    pub g12_0: C64,
    #[serde(with = "crate::cser")]
    pub v_0: C64,
    #[serde(with = "crate::cser")]
    pub k_0: C64,
}

impl Default for AuxSeeds {
    fn default() -> Self {
        Self {
            g12_0: c(1.0),
            v_0: c(1.0),
            k_0: c(1.0),
        }
    }
}

impl AuxSeeds {
    fn for_kind(&self, kind: PainleveKind) -> C64 {
        match kind {
            PainleveKind::P3 => self.g12_0,
            PainleveKind::P5 => self.v_0,
            PainleveKind::P6 => self.k_0,
            _ => c(1.0),
        }
    }
}

/// A trajectory together with everything needed to evaluate its Lax pair
/// at any `(x, t)` covered by the trajectory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    params: ParamSet,
    traj: Trajectory,
    seeds: AuxSeeds,
    rho: RhoChoice,
    du_shift: C64,
    scale: Option<CumulativeIntegral>,
}

impl Pipeline {
    pub fn new(params: ParamSet, traj: Trajectory, seeds: AuxSeeds) -> Result<Self> {
        if *traj.params() != params {
            return Err(Error::Consistency(
                "trajectory was integrated with different parameters".into(),
            ));
        }
        let mut p = Self {
            params,
            traj,
            seeds,
            rho: RhoChoice::default(),
            du_shift: c(0.0),
            scale: None,
        };
        p.rebuild()?;
        Ok(p)
    }

    /// Add a constant to the velocity read from the trajectory; the result
    /// is no longer a solution and serves as a negative control.
    pub fn with_velocity_shift(mut self, d: C64) -> Result<Self> {
        self.du_shift = d;
        self.rebuild()?;
        Ok(self)
    }

    pub fn with_rho(mut self, rho: RhoChoice) -> Self {
        self.rho = rho;
        self
    }

    fn rebuild(&mut self) -> Result<()> {
        self.scale = match self.params.kind() {
            PainleveKind::P3 | PainleveKind::P5 | PainleveKind::P6 => {
                let (params, d) = (self.params, self.du_shift);
                let g = move |s: &CalogeroState| {
                    aux_log_rate(&params, &CalogeroState::new(s.t, s.u, s.du + d))
                };
                Some(CumulativeIntegral::new(&self.traj, self.traj.t_start(), g)?)
            }
            _ => None,
        };
        Ok(())
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn kind(&self) -> PainleveKind {
        self.params.kind()
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn rho(&self) -> RhoChoice {
        self.rho
    }

    pub fn seeds(&self) -> AuxSeeds {
        self.seeds
    }

    pub fn state_at(&self, t: f64) -> Result<CalogeroState> {
        let s = self.traj.state_at(t)?;
        Ok(CalogeroState::new(t, s.u, s.du + self.du_shift))
    }

    /// `log` of the integrated auxiliary scale relative to its seed.
    pub fn log_scale(&self, t: f64) -> Result<C64> {
        match &self.scale {
            None => Ok(c(0.0)),
            Some(q) => {
                let (params, d) = (self.params, self.du_shift);
                let g = move |s: &CalogeroState| {
                    aux_log_rate(&params, &CalogeroState::new(s.t, s.u, s.du + d))
                };
                q.at(&self.traj, &g, t)
            }
        }
    }

    pub fn aux_at(&self, t: f64) -> Result<(CalogeroState, AuxState)> {
        let s = self.state_at(t)?;
        let aux = self.aux_for(&s)?;
        Ok((s, aux))
    }

    fn aux_for(&self, s: &CalogeroState) -> Result<AuxState> {
        let kind = self.kind();
        let scale = || -> Result<C64> {
            Ok(self.seeds.for_kind(kind) * self.log_scale(s.t)?.exp())
        };
        Ok(match kind {
            PainleveKind::P3 => AuxState::P3(p3_aux(&self.params, s, scale()?)?),
            PainleveKind::P5 => AuxState::P5(p5_aux(&self.params, s, scale()?)?),
            PainleveKind::P6 => AuxState::P6(p6_aux(&self.params, s, scale()?)?),
            _ => AuxState::None,
        })
    }

    pub fn eval(&self, x: C64, t: f64) -> Result<LaxEval> {
        let (s, aux) = self.aux_at(t)?;
        build(&self.params, &s, &aux, x, self.rho)
    }

    /// The pair before the final diagonal gauge, and that gauge. Kinds
    /// without a separate gauge step return the pair with the identity.
    pub fn eval_pre_gauge(&self, x: C64, t: f64) -> Result<(LaxEval, GaugeFactor)> {
        let (s, aux) = self.aux_at(t)?;
        match aux {
            AuxState::P5(a) => build_p5_pre_gauge(&s, &a, x),
            AuxState::P6(a) => build_p6_pre_gauge(&p6_elliptic(t)?, &s, &a, x, self.rho),
            _ => Ok((build(&self.params, &s, &aux, x, self.rho)?, GaugeFactor::identity())),
        }
    }
}

// --- zero curvature ---------------------------------------------------------

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

pub fn frobenius(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|| d_t U - d_x V + [U, V] ||_F` with central differences in both
/// variables, for any pair given as a function of `(x, t)`.
pub fn curvature_norm<F>(pair: &F, x: C64, t: f64, h_t: f64, h_x: f64) -> Result<f64>
where
    F: Fn(C64, f64) -> Result<LaxEval>,
{
    let l = pair(x, t)?;
    let ut = (pair(x, t + h_t)?.um - pair(x, t - h_t)?.um) / c(2.0 * h_t);
    let vx = (pair(x + h_x, t)?.vm - pair(x - h_x, t)?.vm) / c(2.0 * h_x);
    Ok(frobenius(&(ut - vx + commutator(&l.um, &l.vm))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub kind: PainleveKind,
    #[serde(with = "crate::cser")]
    pub x: C64,
    pub t: f64,
    pub h: f64,
    pub residual: f64,
    pub halved_residual: f64,
    pub order_estimate: f64,
}

impl ResidualReport {
    pub fn ratio(&self) -> f64 {
        self.residual / self.halved_residual
    }
}

/// Zero-curvature residual at `(x, t)` with steps `(h_t, h_x)` and again
/// with both halved.
pub fn zero_curvature_residual(p: &Pipeline, x: C64, t: f64, h_t: f64, h_x: f64) -> Result<ResidualReport> {
    let f = |x: C64, t: f64| p.eval(x, t);
    let r1 = curvature_norm(&f, x, t, h_t, h_x)?;
    let r2 = curvature_norm(&f, x, t, h_t / 2.0, h_x / 2.0)?;
    Ok(ResidualReport {
        kind: p.kind(),
        x,
        t,
        h: h_t,
        residual: r1,
        halved_residual: r2,
        order_estimate: (r1 / r2).log2(),
    })
}

/// 4th-order central difference of `d_x U` from values, for comparing
/// with the analytic `um_x`.
pub fn um_x_fd<F>(pair: &F, x: C64, t: f64, h: f64) -> Result<Mat2>
where
    F: Fn(C64, f64) -> Result<LaxEval>,
{
    let hc = c(h);
    let m = |k: f64| -> Result<Mat2> { Ok(pair(x + k * h, t)?.um) };
    Ok((m(-2.0)? - m(-1.0)? * c(8.0) + m(1.0)? * c(8.0) - m(2.0)?) / (c(12.0) * hc))
}
