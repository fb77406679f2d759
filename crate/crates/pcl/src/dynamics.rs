//! The six Painleve equations as Newton equations `u'' = -dV/du`.
//!
//! Time is real; coordinates and parameters are complex. For P6 the
//! potential lives on the lattice `Z + tau Z` with `tau = 2 pi i t`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::elliptic::{lattice_distance, Elliptic, HalfPeriods, ModularParam, C64};
use crate::error::{ensure_finite, Error, Result};
use crate::integrate::Trajectory;

const I: C64 = C64::new(0.0, 1.0);

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PainleveKind {
    P1,
    P2,
    #[serde(rename = "P3_truncated")]
    P3Truncated,
    P3,
    P4,
    P5,
    P6,
}

impl PainleveKind {
    pub const ALL: [PainleveKind; 7] = [
        PainleveKind::P1,
        PainleveKind::P2,
        PainleveKind::P3Truncated,
        PainleveKind::P3,
        PainleveKind::P4,
        PainleveKind::P5,
        PainleveKind::P6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PainleveKind::P1 => "P1",
            PainleveKind::P2 => "P2",
            PainleveKind::P3Truncated => "P3_truncated",
            PainleveKind::P3 => "P3",
            PainleveKind::P4 => "P4",
            PainleveKind::P5 => "P5",
            PainleveKind::P6 => "P6",
        }
    }

    /// Distance from `u` to the set where the potential is singular
    /// (infinite for kinds with an entire potential).
    pub fn singular_distance(self, u: C64, t: f64) -> f64 {
        match self {
            PainleveKind::P4 => u.norm(),
            // sinh u = 0 or cosh u = 0 <=> u in (i pi / 2) Z
            PainleveKind::P5 => {
                let step = PI / 2.0;
                let k = (u.im / step).round();
                (u - I * (k * step)).norm()
            }
            // poles of wp(u + omega_k): 2u on the lattice
            PainleveKind::P6 => {
                let tau = 2.0 * PI * I * t;
                0.5 * lattice_distance(2.0 * u, tau)
            }
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for PainleveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of each equation. P5 and P6 are stored in the `(alpha, beta,
/// gamma, delta)` form; the other parametrizations are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ParamSet {
    P1,
    P2 {
        #[serde(with = "crate::cser")]
        alpha: C64,
    },
    #[serde(rename = "P3_truncated")]
    P3Truncated {
        #[serde(with = "crate::cser")]
        nu: C64,
    },
    P3 {
        #[serde(with = "crate::cser")]
        nu: C64,
        #[serde(with = "crate::cser")]
        mu: C64,
        #[serde(with = "crate::cser")]
        rho: C64,
    },
    P4 {
        #[serde(with = "crate::cser")]
        alpha: C64,
        #[serde(with = "crate::cser")]
        beta: C64,
    },
    P5 {
        #[serde(with = "crate::cser")]
        alpha: C64,
        #[serde(with = "crate::cser")]
        beta: C64,
        #[serde(with = "crate::cser")]
        gamma: C64,
        #[serde(with = "crate::cser")]
        delta: C64,
    },
    P6 {
        #[serde(with = "crate::cser")]
        alpha: C64,
        #[serde(with = "crate::cser")]
        beta: C64,
        #[serde(with = "crate::cser")]
        gamma: C64,
        #[serde(with = "crate::cser")]
        delta: C64,
    },
}

/// `(theta, lambda, chi)` constants of the general P3 system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P3Constants {
    pub theta: C64,
    pub lambda: C64,
    pub chi: C64,
}

/// `(xi, zeta, sigma)` constants of the P5 system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P5Constants {
    pub xi: C64,
    pub zeta: C64,
    pub sigma: C64,
}

/// `xi_0 .. xi_3` and their sum `xi` for P6.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P6Constants {
    pub xi_i: [C64; 4],
    pub xi: C64,
}

impl ParamSet {
    pub fn kind(&self) -> PainleveKind {
        match self {
            ParamSet::P1 => PainleveKind::P1,
            ParamSet::P2 { .. } => PainleveKind::P2,
            ParamSet::P3Truncated { .. } => PainleveKind::P3Truncated,
            ParamSet::P3 { .. } => PainleveKind::P3,
            ParamSet::P4 { .. } => PainleveKind::P4,
            ParamSet::P5 { .. } => PainleveKind::P5,
            ParamSet::P6 { .. } => PainleveKind::P6,
        }
    }

    pub fn values(&self) -> Vec<C64> {
        match *self {
            ParamSet::P1 => vec![],
            ParamSet::P2 { alpha } => vec![alpha],
            ParamSet::P3Truncated { nu } => vec![nu],
            ParamSet::P3 { nu, mu, rho } => vec![nu, mu, rho],
            ParamSet::P4 { alpha, beta } => vec![alpha, beta],
            ParamSet::P5 {
                alpha,
                beta,
                gamma,
                delta,
            }
            | ParamSet::P6 {
                alpha,
                beta,
                gamma,
                delta,
            } => vec![alpha, beta, gamma, delta],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.values() {
            ensure_finite("parameter", v)?;
        }
        Ok(())
    }

    /// P5 from `(xi, zeta, sigma)`: `alpha = 2(xi+sigma)^2`, `beta = -2 zeta^2`,
    /// `gamma = 2 sigma - 1`, `delta = -1/2`.
    pub fn p5_from_constants(k: P5Constants) -> ParamSet {
        ParamSet::P5 {
            alpha: 2.0 * (k.xi + k.sigma) * (k.xi + k.sigma),
            beta: -2.0 * k.zeta * k.zeta,
            gamma: 2.0 * k.sigma - 1.0,
            delta: c(-0.5),
        }
    }

    /// Inverse of [`ParamSet::p5_from_constants`] on principal square-root branches.
    pub fn p5_constants(&self) -> Result<P5Constants> {
        match *self {
            ParamSet::P5 {
                alpha,
                beta,
                gamma,
                delta,
            } => {
                if (delta + 0.5).norm() > 1e-14 {
                    return Err(Error::Domain(format!(
                        "the P5 Lax pair is written for delta = -1/2, got {delta}"
                    )));
                }
                let sigma = (gamma + 1.0) / 2.0;
                Ok(P5Constants {
                    xi: (alpha / 2.0).sqrt() - sigma,
                    zeta: (-beta / 2.0).sqrt(),
                    sigma,
                })
            }
            _ => Err(Error::Argument("not a P5 parameter set".into())),
        }
    }

    /// P6 from `nu_0 .. nu_3`: `alpha = nu_0`, `beta = -nu_1`, `gamma = nu_2`, `delta = 1/2 - nu_3`.
    pub fn p6_from_nu(nu: [C64; 4]) -> ParamSet {
        ParamSet::P6 {
            alpha: nu[0],
            beta: -nu[1],
            gamma: nu[2],
            delta: 0.5 - nu[3],
        }
    }

    pub fn p6_nu(&self) -> Result<[C64; 4]> {
        match *self {
            ParamSet::P6 {
                alpha,
                beta,
                gamma,
                delta,
            } => Ok([alpha, -beta, gamma, 0.5 - delta]),
            _ => Err(Error::Argument("not a P6 parameter set".into())),
        }
    }

    /// P6 from `xi_0 .. xi_3`: `nu_0 = 2(xi + 1/2)^2`, `nu_k = 2 xi_{k-1}^2`.
    pub fn p6_from_xi(xi_i: [C64; 4]) -> ParamSet {
        let xi: C64 = xi_i.iter().sum();
        let two = |z: C64| 2.0 * z * z;
        ParamSet::p6_from_nu([two(xi + 0.5), two(xi_i[0]), two(xi_i[1]), two(xi_i[2])])
    }

    /// Inverse of [`ParamSet::p6_from_xi`] on principal square-root branches.
    pub fn p6_constants(&self) -> Result<P6Constants> {
        let nu = self.p6_nu()?;
        let r = |z: C64| (z / 2.0).sqrt();
        let xi = r(nu[0]) - 0.5;
        let (x0, x1, x2) = (r(nu[1]), r(nu[2]), r(nu[3]));
        Ok(P6Constants {
            xi_i: [x0, x1, x2, xi - x0 - x1 - x2],
            xi,
        })
    }

    /// `(theta, lambda, chi)` for the general P3 pair; it exists for `mu = 1/2`,
    /// where `theta + 1 = nu^2 e^{-2 rho}`, `4 lambda = -nu^2 e^{2 rho}`, `chi = 1/16`.
    pub fn p3_constants(&self) -> Result<P3Constants> {
        match *self {
            ParamSet::P3 { nu, mu, rho } => {
                if (mu - 0.5).norm() > 1e-14 {
                    return Err(Error::Domain(format!(
                        "the general P3 Lax pair is written for mu = 1/2, got {mu}"
                    )));
                }
                let n2 = nu * nu;
                Ok(P3Constants {
                    theta: n2 * (-2.0 * rho).exp() - 1.0,
                    lambda: -n2 * (2.0 * rho).exp() / 4.0,
                    chi: c(1.0 / 16.0),
                })
            }
            _ => Err(Error::Argument("not a P3 parameter set".into())),
        }
    }

    /// Coefficients `(alpha, beta, gamma, delta)` of the original P3 equation.
    fn p3_original(&self) -> (C64, C64, C64, C64) {
        let (nu, mu, rho) = match *self {
            ParamSet::P3 { nu, mu, rho } => (nu, mu, rho),
            ParamSet::P3Truncated { nu } => (nu, c(0.0), c(0.0)),
            _ => unreachable!(),
        };
        let n2 = nu * nu;
        let m2 = mu * mu;
        (
            2.0 * n2 * (-2.0 * rho).exp(),
            -2.0 * n2 * (2.0 * rho).exp(),
            4.0 * m2,
            -4.0 * m2,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalogeroState {
    pub t: f64,
    #[serde(with = "crate::cser")]
    pub u: C64,
    #[serde(with = "crate::cser")]
    pub du: C64,
}

impl CalogeroState {
    pub fn new(t: f64, u: C64, du: C64) -> Self {
        Self { t, u, du }
    }
}

fn p6_ell(t: f64) -> Result<Elliptic> {
    Ok(Elliptic::new(&ModularParam::from_time(c(t))?))
}

fn guard(kind: PainleveKind, x: C64, t: f64) -> Result<()> {
    ensure_finite("x", x)?;
    if !t.is_finite() {
        return Err(Error::Domain("t is not finite".into()));
    }
    if kind.singular_distance(x, t) < 1e-12 {
        return Err(Error::Pole {
            what: format!("{kind} potential"),
            at: x,
        });
    }
    Ok(())
}

pub fn potential(params: &ParamSet, x: C64, t: f64) -> Result<C64> {
    guard(params.kind(), x, t)?;
    let et = c(t.exp());
    Ok(match *params {
        ParamSet::P1 => -x.powi(3) / 2.0 - t * x / 4.0,
        ParamSet::P2 { alpha } => {
            let s = x * x + t / 2.0;
            -0.5 * s * s + alpha * x
        }
        ParamSet::P3Truncated { nu } => -nu * nu * et * (2.0 * x).cosh(),
        ParamSet::P3 { nu, mu, rho } => {
            -nu * nu * et * (2.0 * x - 2.0 * rho).cosh() - mu * mu * et * et * (4.0 * x).cosh()
        }
        ParamSet::P4 { alpha, beta } => {
            let x2 = x * x;
            -x2 * x2 * x2 / 8.0 - t * x2 * x2 / 2.0 - 0.5 * (t * t - alpha) * x2
                + beta / (4.0 * x2)
        }
        ParamSet::P5 {
            alpha,
            beta,
            gamma,
            delta,
        } => {
            let (s, ch) = (x.sinh(), x.cosh());
            -alpha / (s * s) - beta / (ch * ch)
                + gamma * et * et / 2.0 * (2.0 * x).cosh()
                + delta * et.powi(4) / 8.0 * (4.0 * x).cosh()
        }
        ParamSet::P6 { .. } => {
            let nu = params.p6_nu()?;
            let ell = p6_ell(t)?;
            let hp = ell.half_periods();
            let mut v = c(0.0);
            for (n, w) in nu.iter().zip(hp.omega) {
                v -= n * ell.wp(x + w)?;
            }
            v
        }
    })
}

/// `-dV/dx`, the right-hand side of the Newton equation.
pub fn force(params: &ParamSet, x: C64, t: f64) -> Result<C64> {
    guard(params.kind(), x, t)?;
    let et = c(t.exp());
    Ok(match *params {
        ParamSet::P1 => (6.0 * x * x + t) / 4.0,
        ParamSet::P2 { alpha } => 2.0 * x.powi(3) + t * x - alpha,
        ParamSet::P3Truncated { nu } => 2.0 * nu * nu * et * (2.0 * x).sinh(),
        ParamSet::P3 { nu, mu, rho } => {
            2.0 * nu * nu * et * (2.0 * x - 2.0 * rho).sinh()
                + 4.0 * mu * mu * et * et * (4.0 * x).sinh()
        }
        ParamSet::P4 { alpha, beta } => {
            0.75 * x.powi(5) + 2.0 * t * x.powi(3) + (t * t - alpha) * x
                + beta / (2.0 * x.powi(3))
        }
        ParamSet::P5 {
            alpha,
            beta,
            gamma,
            delta,
        } => {
            let (s, ch) = (x.sinh(), x.cosh());
            -2.0 * alpha * ch / s.powi(3) - 2.0 * beta * s / ch.powi(3)
                - gamma * et * et * (2.0 * x).sinh()
                - 0.5 * delta * et.powi(4) * (4.0 * x).sinh()
        }
        ParamSet::P6 { .. } => {
            let nu = params.p6_nu()?;
            let ell = p6_ell(t)?;
            let hp = ell.half_periods();
            let mut f = c(0.0);
            for (n, w) in nu.iter().zip(hp.omega) {
                f += n * ell.wp_prime(x + w)?;
            }
            f
        }
    })
}

/// `rhs(state) = u''`.
pub fn rhs(params: &ParamSet, s: &CalogeroState) -> Result<C64> {
    force(params, s.u, s.t)
}

/// `dV/dt` at fixed x.
pub fn potential_dt(params: &ParamSet, x: C64, t: f64) -> Result<C64> {
    guard(params.kind(), x, t)?;
    let et = c(t.exp());
    Ok(match *params {
        ParamSet::P1 => -x / 4.0,
        ParamSet::P2 { .. } => -x * x / 2.0 - t / 4.0,
        ParamSet::P3Truncated { nu } => -nu * nu * et * (2.0 * x).cosh(),
        ParamSet::P3 { nu, mu, rho } => {
            -nu * nu * et * (2.0 * x - 2.0 * rho).cosh()
                - 2.0 * mu * mu * et * et * (4.0 * x).cosh()
        }
        ParamSet::P4 { .. } => -x.powi(4) / 2.0 - t * x * x,
        ParamSet::P5 { gamma, delta, .. } => {
            gamma * et * et * (2.0 * x).cosh() + 0.5 * delta * et.powi(4) * (4.0 * x).cosh()
        }
        ParamSet::P6 { .. } => {
            // d/dt = 2 pi i d/dtau, and the half-periods move with tau.
            let nu = params.p6_nu()?;
            let ell = p6_ell(t)?;
            let hp = ell.half_periods();
            let mut d = c(0.0);
            for k in 0..4 {
                let z = x + hp.omega[k];
                let dtau = ell.dtau_wp(z)? + ell.wp_prime(z)? * HalfPeriods::dtau(k as i64);
                d -= nu[k] * dtau;
            }
            2.0 * PI * I * d
        }
    })
}

pub fn hamiltonian(params: &ParamSet, s: &CalogeroState) -> Result<C64> {
    Ok(s.du * s.du / 2.0 + potential(params, s.u, s.t)?)
}

/// `dH/dt` along solutions equals `dV/dt` at fixed coordinate.
pub fn hamiltonian_dt(params: &ParamSet, s: &CalogeroState) -> Result<C64> {
    potential_dt(params, s.u, s.t)
}

/// Image `(y, T)` of a state under the change of variables back to the
/// original equation.
pub fn to_original(params: &ParamSet, s: &CalogeroState) -> Result<(C64, C64)> {
    let u = s.u;
    let t = s.t;
    guard(params.kind(), u, t)?;
    Ok(match params.kind() {
        PainleveKind::P1 | PainleveKind::P2 => (u, c(t)),
        PainleveKind::P4 => (u * u, c(t)),
        PainleveKind::P3 | PainleveKind::P3Truncated => ((2.0 * u).exp(), c(t.exp())),
        PainleveKind::P5 => {
            let th = u.cosh() / u.sinh();
            (th * th, c((2.0 * t).exp()))
        }
        PainleveKind::P6 => {
            let ell = p6_ell(t)?;
            let (e1, e2, e3) = (ell.e(1), ell.e(2), ell.e(3));
            ((ell.wp(u)? - e1) / (e2 - e1), (e3 - e1) / (e2 - e1))
        }
    })
}

/// `|y'' - RHS(y', y, T)|` for the original equation of the given kind.
pub fn original_equation_residual(
    params: &ParamSet,
    tt: C64,
    y: C64,
    y1: C64,
    y2: C64,
) -> C64 {
    let rhs = match *params {
        ParamSet::P1 => (6.0 * y * y + tt) / 4.0,
        ParamSet::P2 { alpha } => 2.0 * y.powi(3) + tt * y - alpha,
        ParamSet::P4 { alpha, beta } => {
            y1 * y1 / (2.0 * y) + 1.5 * y.powi(3) + 4.0 * tt * y * y
                + 2.0 * (tt * tt - alpha) * y
                + beta / y
        }
        ParamSet::P3 { .. } | ParamSet::P3Truncated { .. } => {
            let (a, b, g, d) = params.p3_original();
            y1 * y1 / y - y1 / tt + (a * y * y + b) / tt + g * y.powi(3) + d / y
        }
        ParamSet::P5 {
            alpha,
            beta,
            gamma,
            delta,
        } => {
            let ym = y - 1.0;
            (1.0 / (2.0 * y) + 1.0 / ym) * y1 * y1 - y1 / tt
                + y * ym * ym / (tt * tt)
                    * (alpha + beta / (y * y) + gamma * tt / (ym * ym)
                        + delta * tt * tt * (y + 1.0) / ym.powi(3))
        }
        ParamSet::P6 {
            alpha,
            beta,
            gamma,
            delta,
        } => {
            let (ym, yt, tm) = (y - 1.0, y - tt, tt - 1.0);
            0.5 * (1.0 / y + 1.0 / ym + 1.0 / yt) * y1 * y1
                - (1.0 / tt + 1.0 / tm + 1.0 / yt) * y1
                + y * ym * yt / (tt * tt * tm * tm)
                    * (alpha + beta * tt / (y * y) + gamma * tm / (ym * ym)
                        + delta * tt * tm / (yt * yt))
        }
    };
    y2 - rhs
}

/// Original-variable jet `(T, y, y', y'')` at `t`, with `d/dT` from the
/// chain rule and 5-point differences in `t` of the dense output.
pub fn original_jet(traj: &Trajectory, t: f64, h: f64) -> Result<(C64, C64, C64, C64)> {
    let params = *traj.params();
    let mut ys = [c(0.0); 5];
    let mut ts = [c(0.0); 5];
    for (k, j) in (-2i32..=2).enumerate() {
        let s = traj.state_at(t + j as f64 * h)?;
        (ys[k], ts[k]) = to_original(&params, &s)?;
    }
    let d1 = |f: &[C64; 5]| (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
    let d2 = |f: &[C64; 5]| (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h);
    let (yd, ydd, td, tdd) = (d1(&ys), d2(&ys), d1(&ts), d2(&ts));
    if td.norm() < 1e-300 {
        return Err(Error::Branch("dT/dt vanishes".into()));
    }
    let y1 = yd / td;
    let y2 = (ydd * td - yd * tdd) / (td * td * td);
    Ok((ts[2], ys[2], y1, y2))
}

/// `|y'' - RHS| / (1 + |y''|)` of the original equation at `t`.
pub fn original_form_residual(traj: &Trajectory, t: f64, h: f64) -> Result<f64> {
    let (tt, y, y1, y2) = original_jet(traj, t, h)?;
    let r = original_equation_residual(traj.params(), tt, y, y1, y2);
    Ok(r.norm() / (1.0 + y2.norm()))
}
