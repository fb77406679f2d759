//! Adaptive Dormand-Prince 5(4) integration of `u'' = F(u, t)` with
//! quintic Hermite dense output, plus cumulative Gauss-Legendre integrals
//! of functionals along the interpolated motion.

use std::io::Write;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::cser::cell;
use crate::dynamics::{force, CalogeroState, ParamSet};
use crate::elliptic::C64;
use crate::error::{Error, Result};

/// Abort thresholds of the singularity monitor.
pub const MAX_VELOCITY: f64 = 1e8;
pub const MIN_SINGULAR_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Relative and absolute local error target per step.
    pub tol: f64,
    /// Step cap; keeps the dense output accurate between nodes.
    pub h_max: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            h_max: 2.5e-3,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// A stored integration node: state plus the acceleration there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub u: C64,
    pub du: C64,
    pub ddu: C64,
}

impl Node {
    pub fn state(&self) -> CalogeroState {
        CalogeroState::new(self.t, self.u, self.du)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    params: ParamSet,
    nodes: Vec<Node>,
    t_start: f64,
    t_end: f64,
    pub options: IntegratorOptions,
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand-Prince tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type Y = [C64; 2];

fn axpy(y: &Y, h: f64, terms: &[(f64, &Y)]) -> Y {
    let mut out = *y;
    for (a, k) in terms {
        out[0] += h * a * k[0];
        out[1] += h * a * k[1];
    }
    out
}

struct Rhs<'a> {
    params: &'a ParamSet,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: &Y) -> Result<Y> {
        Ok([y[1], force(self.params, y[0], t)?])
    }
}

/// Integrate from `initial` to `t_end` (either direction) with default step cap.
pub fn integrate(
    params: &ParamSet,
    initial: CalogeroState,
    t_end: f64,
    tol: f64,
) -> Result<Trajectory> {
    integrate_with(params, initial, t_end, IntegratorOptions::with_tol(tol))
}

pub fn integrate_with(
    params: &ParamSet,
    initial: CalogeroState,
    t_end: f64,
    opts: IntegratorOptions,
) -> Result<Trajectory> {
    let (traj, err) = integrate_partial(params, initial, t_end, opts)?;
    match err {
        None => Ok(traj),
        Some(e) => Err(e),
    }
}

/// Like [`integrate_with`] but keeps the part computed before a blow-up.
/// Errors in the initial data are still returned as `Err`.
pub fn integrate_partial(
    params: &ParamSet,
    initial: CalogeroState,
    t_end: f64,
    opts: IntegratorOptions,
) -> Result<(Trajectory, Option<Error>)> {
    params.validate()?;
    if !(opts.tol > 0.0 && opts.h_max > 0.0) {
        return Err(Error::Argument("tolerance and step cap must be positive".into()));
    }
    if !t_end.is_finite() || !initial.t.is_finite() {
        return Err(Error::Domain("non-finite time".into()));
    }
    let kind = params.kind();
    let rhs = Rhs { params };
    let mut t = initial.t;
    let mut y: Y = [initial.u, initial.du];
    let mut k1 = rhs.eval(t, &y)?;
    let mut nodes = vec![Node {
        t,
        u: y[0],
        du: y[1],
        ddu: k1[1],
    }];
    let span = t_end - t;
    let dir = span.signum();
    let tol = opts.tol;
    let mut h = (0.01 * span.abs()).min(opts.h_max).max(1e-6) * dir;
    let mut err_old = 1e-4f64;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut failure = None;

    let finish = |nodes: Vec<Node>, accepted, rejected| {
        let mut nodes = nodes;
        if dir < 0.0 {
            nodes.reverse();
        }
        Trajectory {
            params: *params,
            nodes,
            t_start: initial.t,
            t_end,
            options: opts,
            accepted,
            rejected,
        }
    };

    if span == 0.0 {
        return Ok((finish(nodes, 0, 0), None));
    }

    while (t_end - t) * dir > 0.0 {
        let last = (t_end - t).abs() <= h.abs() * (1.0 + 1e-6);
        if last {
            h = t_end - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            failure = Some(Error::BlowUp {
                t,
                u: y[0],
                du: y[1],
                reason: "step size underflow".into(),
            });
            break;
        }
        let stages = (|| -> Result<(Y, Y, f64)> {
            let k2 = rhs.eval(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
            let k3 = rhs.eval(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = rhs.eval(
                t + C4 * h,
                &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            )?;
            let k5 = rhs.eval(
                t + C5 * h,
                &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = rhs.eval(
                t + h,
                &axpy(
                    &y,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            )?;
            let y_new = axpy(
                &y,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = rhs.eval(t + h, &y_new)?;
            let mut err2 = 0.0;
            for i in 0..2 {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = tol + tol * y[i].norm().max(y_new[i].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            Ok((y_new, k7, (err2 / 2.0).sqrt()))
        })();

        let (y_new, k7, err) = match stages {
            Ok(v) => v,
            Err(Error::Pole { .. }) => {
                // A stage landed on a singularity: shrink and retry.
                rejected += 1;
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        if !err.is_finite() || err > 1.0 {
            rejected += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= fac;
            continue;
        }

        t = if last { t_end } else { t + h };
        y = y_new;
        k1 = k7;
        accepted += 1;

        if y[1].norm() > MAX_VELOCITY
            || kind.singular_distance(y[0], t) < MIN_SINGULAR_DISTANCE
            || !(y[0].re.is_finite() && y[0].im.is_finite())
        {
            let lastgood = nodes.last().copied().unwrap();
            failure = Some(Error::BlowUp {
                t: lastgood.t,
                u: lastgood.u,
                du: lastgood.du,
                reason: "approach to a singularity".into(),
            });
            break;
        }
        nodes.push(Node {
            t,
            u: y[0],
            du: y[1],
            ddu: k1[1],
        });

        let e = err.max(1e-10);
        let fac = (0.9 * e.powf(-0.14) * err_old.powf(0.08)).clamp(0.2, 5.0);
        err_old = e;
        h = (h * fac).abs().min(opts.h_max) * dir;
    }
    Ok((finish(nodes, accepted, rejected), failure))
}

/// Quintic Hermite interpolation on one interval: value and first derivative.
fn hermite5(a: &Node, b: &Node, t: f64) -> (C64, C64) {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let hh = h * h;
    let u = h0 * a.u + h * h1 * a.du + hh * h2 * a.ddu + hh * h3 * b.ddu + h * h4 * b.du + h5 * b.u;
    let du = (d0 * a.u + h * d1 * a.du + hh * d2 * a.ddu + hh * d3 * b.ddu + h * d4 * b.du
        + d5 * b.u)
        / h;
    (u, du)
}

impl Trajectory {
    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn states(&self) -> Vec<CalogeroState> {
        self.nodes.iter().map(Node::state).collect()
    }

    /// Covered time interval `(t_min, t_max)`.
    pub fn t_range(&self) -> (f64, f64) {
        (self.nodes[0].t, self.nodes[self.nodes.len() - 1].t)
    }

    /// Time at which the initial data was imposed.
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn initial_state(&self) -> CalogeroState {
        if self.t_start <= self.t_end {
            self.nodes[0].state()
        } else {
            self.nodes[self.nodes.len() - 1].state()
        }
    }

    /// State at the last integrated time (`t_end` unless the run blew up).
    pub fn final_state(&self) -> CalogeroState {
        if self.t_start <= self.t_end {
            self.nodes[self.nodes.len() - 1].state()
        } else {
            self.nodes[0].state()
        }
    }

    fn interval(&self, t: f64) -> Result<usize> {
        let (a, b) = self.t_range();
        let slack = 1e-12 * (b - a).abs().max(1.0);
        if !(t >= a - slack && t <= b + slack) || self.nodes.len() < 2 {
            return Err(Error::Domain(format!(
                "t = {t} outside the trajectory range [{a}, {b}]"
            )));
        }
        let i = self.nodes.partition_point(|n| n.t <= t);
        Ok(i.clamp(1, self.nodes.len() - 1) - 1)
    }

    /// Dense-output state at time `t`.
    pub fn state_at(&self, t: f64) -> Result<CalogeroState> {
        if self.nodes.len() == 1 && t == self.nodes[0].t {
            return Ok(self.nodes[0].state());
        }
        let i = self.interval(t)?;
        let (u, du) = hermite5(&self.nodes[i], &self.nodes[i + 1], t);
        Ok(CalogeroState::new(t, u, du))
    }

    /// CSV with header `t,re_u,im_u,re_du,im_du`, rows in time order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "re_u", "im_u", "re_du", "im_du"])?;
        for n in &self.nodes {
            wr.write_record([
                cell(n.t),
                cell(n.u.re),
                cell(n.u.im),
                cell(n.du.re),
                cell(n.du.im),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `Q(t) = integral from t_ref to t of g(state(s)) ds` along a trajectory,
/// accumulated interval by interval with Gauss-Legendre quadrature over the
/// dense output.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    times: Vec<f64>,
    values: Vec<C64>,
    t_ref: f64,
    offset: C64,
}

fn gl_rule() -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(8).unwrap())
        .as_node_weight_pairs()
        .to_vec()
}

fn gl_integrate<F>(rule: &[(f64, f64)], a: f64, b: f64, f: &mut F) -> Result<C64>
where
    F: FnMut(f64) -> Result<C64>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = C64::new(0.0, 0.0);
    for &(x, w) in rule {
        s += w * f(mid + half * x)?;
    }
    Ok(s * half)
}

impl CumulativeIntegral {
    pub fn new<G>(traj: &Trajectory, t_ref: f64, g: G) -> Result<Self>
    where
        G: Fn(&CalogeroState) -> Result<C64>,
    {
        let rule = gl_rule();
        let nodes = traj.nodes();
        let mut times = vec![nodes[0].t];
        let mut values = vec![C64::new(0.0, 0.0)];
        let mut acc = C64::new(0.0, 0.0);
        for w in nodes.windows(2) {
            let mut f = |s: f64| {
                let (u, du) = hermite5(&w[0], &w[1], s);
                g(&CalogeroState::new(s, u, du))
            };
            acc += gl_integrate(&rule, w[0].t, w[1].t, &mut f)?;
            times.push(w[1].t);
            values.push(acc);
        }
        let mut q = Self {
            times,
            values,
            t_ref,
            offset: C64::new(0.0, 0.0),
        };
        q.offset = q.raw(traj, &g, t_ref)?;
        Ok(q)
    }

    fn raw<G>(&self, traj: &Trajectory, g: &G, t: f64) -> Result<C64>
    where
        G: Fn(&CalogeroState) -> Result<C64>,
    {
        if self.times.len() == 1 {
            return Ok(C64::new(0.0, 0.0));
        }
        let i = traj.interval(t)?;
        let nodes = traj.nodes();
        let rule = gl_rule();
        let mut f = |s: f64| {
            let (u, du) = hermite5(&nodes[i], &nodes[i + 1], s);
            g(&CalogeroState::new(s, u, du))
        };
        Ok(self.values[i] + gl_integrate(&rule, nodes[i].t, t, &mut f)?)
    }

    /// Value at `t`; needs the same trajectory and integrand used to build it.
    pub fn at<G>(&self, traj: &Trajectory, g: &G, t: f64) -> Result<C64>
    where
        G: Fn(&CalogeroState) -> Result<C64>,
    {
        Ok(self.raw(traj, g, t)? - self.offset)
    }

    pub fn t_ref(&self) -> f64 {
        self.t_ref
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::hamiltonian;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn p1_short_time_series() {
        let p = ParamSet::P1;
        let s0 = CalogeroState::new(0.3, c(0.4), c(-0.2));
        let tr = integrate(&p, s0, 0.31, 1e-12).unwrap();
        let s = 1e-3;
        let got = tr.state_at(0.3 + s).unwrap().u;
        let want = s0.u + s0.du * s + (6.0 * s0.u * s0.u + s0.t) / 8.0 * s * s;
        assert!((got - want).norm() < 5e-9, "{}", (got - want).norm());
    }

    #[test]
    fn time_reversal() {
        let p = ParamSet::P2 { alpha: c(0.3) };
        let tol = 1e-10;
        let s0 = CalogeroState::new(0.0, c(0.5), c(0.1));
        let fw = integrate(&p, s0, 0.5, tol).unwrap();
        let end = fw.final_state();
        let bw = integrate(&p, end, 0.0, tol).unwrap();
        let back = bw.final_state();
        assert!((back.t - 0.0).abs() < 1e-15);
        assert!((back.u - s0.u).norm() < 10.0 * tol);
        assert!((back.du - s0.du).norm() < 10.0 * tol);
        let (a, b) = bw.t_range();
        assert!(a < b);
    }

    #[test]
    fn blow_up_is_reported() {
        // P1 with large velocity reaches a pole quickly.
        let p = ParamSet::P1;
        let s0 = CalogeroState::new(0.0, c(1.0), c(10.0));
        let r = integrate(&p, s0, 5.0, 1e-10);
        assert!(matches!(r, Err(Error::BlowUp { .. })));
        let (tr, e) = integrate_partial(&p, s0, 5.0, IntegratorOptions::with_tol(1e-10)).unwrap();
        assert!(e.is_some());
        assert!(tr.nodes().len() > 2);
    }

    #[test]
    fn dense_output_matches_nodes_and_is_smooth() {
        let p = ParamSet::P2 { alpha: c(0.0) };
        let tr = integrate(&p, CalogeroState::new(0.0, c(0.3), c(0.2)), 0.4, 1e-12).unwrap();
        let n = tr.nodes()[7];
        let s = tr.state_at(n.t).unwrap();
        assert!((s.u - n.u).norm() < 1e-15 && (s.du - n.du).norm() < 1e-13);
        let h = 1e-5;
        let tm = 0.2345;
        let fd = (tr.state_at(tm + h).unwrap().u - tr.state_at(tm - h).unwrap().u) / (2.0 * h);
        assert!((fd - tr.state_at(tm).unwrap().du).norm() < 1e-9);
    }

    #[test]
    fn cumulative_integral_of_hamiltonian() {
        let p = ParamSet::P1;
        let tr = integrate(&p, CalogeroState::new(0.0, c(0.3), c(0.1)), 0.5, 1e-12).unwrap();
        let g = |s: &CalogeroState| hamiltonian(&p, s);
        let q = CumulativeIntegral::new(&tr, 0.0, g).unwrap();
        assert!(q.at(&tr, &g, 0.0).unwrap().norm() < 1e-15);
        let h = 1e-4;
        let t = 0.31;
        let d = (q.at(&tr, &g, t + h).unwrap() - q.at(&tr, &g, t - h).unwrap()) / (2.0 * h);
        let want = hamiltonian(&p, &tr.state_at(t).unwrap()).unwrap();
        assert!((d - want).norm() < 1e-8);
    }

    #[test]
    fn csv_header_and_order() {
        let p = ParamSet::P1;
        let tr = integrate(&p, CalogeroState::new(0.0, c(0.3), c(0.1)), 0.05, 1e-10).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,re_u,im_u,re_du,im_du\n"));
    }
}
