//! Jacobi theta functions, Weierstrass `wp`, Eisenstein functions and the
//! `Phi` kernel on the lattice `Z + tau Z`.
//!
//! Conventions: `theta_1(z) = -sum exp(pi i tau (k+1/2)^2 + 2 pi i (z+1/2)(k+1/2))`,
//! `theta_2`, `theta_3` as usual and `theta_0` is the classical `theta_4`.
//! Indices are taken modulo 4. Every function here obeys the heat equation
//! `4 pi i d_tau theta = d_z^2 theta`; with `t = tau / (2 pi i)` this reads
//! `2 d_t theta = d_z^2 theta`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Hard cap on the number of series terms on each side of the peak.
const K_CAP: i64 = 200;

/// Relative size of the last included series term.
const SERIES_EPS: f64 = 1e-17;

/// Minimal distance to a lattice point before a quotient is declared a pole.
pub const POLE_GUARD: f64 = 1e-8;

/// The heat coefficient `1/(2 pi i)`.
pub fn kappa() -> C64 {
    C64::new(0.0, -1.0 / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularParam {
    tau: C64,
}

impl ModularParam {
    pub fn new(tau: C64) -> Result<Self> {
        ensure_finite("tau", tau)?;
        if tau.im <= 0.0 {
            return Err(Error::Domain(format!("Im tau must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }

    /// `tau = 2 pi i t`.
    pub fn from_time(t: C64) -> Result<Self> {
        Self::new(2.0 * PI * I * t)
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn time(&self) -> C64 {
        self.tau / (2.0 * PI * I)
    }

    pub fn half_periods(&self) -> HalfPeriods {
        HalfPeriods::new(self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThetaIndex(u8);

impl ThetaIndex {
    pub const ZERO: ThetaIndex = ThetaIndex(0);
    pub const ONE: ThetaIndex = ThetaIndex(1);
    pub const TWO: ThetaIndex = ThetaIndex(2);
    pub const THREE: ThetaIndex = ThetaIndex(3);

    pub fn new(a: i64) -> Self {
        ThetaIndex(a.rem_euclid(4) as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPeriods {
    pub omega: [C64; 4],
}

impl HalfPeriods {
    pub fn new(tau: C64) -> Self {
        let w1 = C64::new(0.5, 0.0);
        let w3 = tau / 2.0;
        Self {
            omega: [C64::new(0.0, 0.0), w1, w1 + w3, w3],
        }
    }

    /// `omega_k` with the index taken modulo 4.
    pub fn get(&self, k: i64) -> C64 {
        self.omega[k.rem_euclid(4) as usize]
    }

    /// `d omega_k / d tau`.
    pub fn dtau(k: i64) -> f64 {
        match k.rem_euclid(4) {
            2 | 3 => 0.5,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticConstants {
    pub eta: C64,
    pub e1: C64,
    pub e2: C64,
    pub e3: C64,
}

impl EllipticConstants {
    pub fn e(&self, k: usize) -> C64 {
        match k {
            1 => self.e1,
            2 => self.e2,
            3 => self.e3,
            _ => panic!("e_k is defined for k = 1, 2, 3"),
        }
    }
}

/// Value and the first three z-derivatives of `theta_a(z|tau)`.
pub fn theta_jet(a: ThetaIndex, z: C64, tau: C64) -> [C64; 4] {
    theta_jet_n::<4>(a, z, tau)
}

/// Value and the first `N - 1` z-derivatives of `theta_a(z|tau)`.
///
/// Uses the trigonometric form of the series (terms `k` and `-k` or
/// `-k-1` paired), which keeps full relative accuracy of `theta_1` near its
/// zero. The real part of `z` is first reduced to `[-1/2, 1/2)`. Terms are
/// added until they drop below `SERIES_EPS` relative to the partial sum (or
/// the largest term, so sums near a zero still terminate), past the peak of
/// the Gaussian envelope, with a hard cap of `K_CAP` terms.
pub fn theta_jet_n<const N: usize>(a: ThetaIndex, z: C64, tau: C64) -> [C64; N] {
    let m = (z.re + 0.5).floor();
    let z = z - m;
    let flip = matches!(a.0, 1 | 2) && (m as i64).rem_euclid(2) == 1;

    // theta_1 = 2 sum (-1)^n q^{(n+1/2)^2} sin((2n+1) pi z), q^x = exp(i pi tau x)
    // theta_2 = 2 sum q^{(n+1/2)^2} cos((2n+1) pi z)
    // theta_3 = 1 + 2 sum_{n>=1} q^{n^2} cos(2 n pi z)
    // theta_0 = 1 + 2 sum_{n>=1} (-1)^n q^{n^2} cos(2 n pi z)
    let (half, alternating, is_sin) = match a.0 {
        1 => (true, true, true),
        2 => (true, false, false),
        3 => (false, false, false),
        _ => (false, true, false),
    };
    let mut acc = [C64::new(0.0, 0.0); N];
    let mut peak = [0.0f64; N];
    if !half {
        acc[0] = C64::new(1.0, 0.0);
        peak[0] = 1.0;
    }
    let n_peak = (z.im.abs() / tau.im).ceil() as i64 + 2;
    let first = if half { 0 } else { 1 };
    for n in first..=K_CAP {
        let nu = if half { n as f64 + 0.5 } else { n as f64 };
        let sgn = if alternating && n % 2 == 1 { -2.0 } else { 2.0 };
        let pref = sgn * (PI * I * tau * nu * nu).exp();
        let k = 2.0 * PI * nu;
        let arg = k * z;
        let (s, c) = (arg.sin(), arg.cos());
        // d^o/dz^o of sin/cos cycles through (s, c, -s, -c) and (c, -s, -c, s)
        let cyc = if is_sin { [s, c, -s, -c] } else { [c, -s, -c, s] };
        let mut kp = 1.0;
        let mut small = n > n_peak;
        for o in 0..N {
            let term = pref * kp * cyc[o % 4];
            acc[o] += term;
            let mag = term.norm();
            peak[o] = peak[o].max(mag);
            if mag > SERIES_EPS * acc[o].norm().max(peak[o]) {
                small = false;
            }
            kp *= k;
        }
        if small {
            break;
        }
    }
    if flip {
        acc.map(|v| -v)
    } else {
        acc
    }
}

fn check_z(z: C64) -> Result<()> {
    ensure_finite("z", z)
}

pub fn theta(a: ThetaIndex, z: C64, tau: &ModularParam) -> Result<C64> {
    check_z(z)?;
    Ok(theta_jet(a, z, tau.tau)[0])
}

pub fn theta_dz(a: ThetaIndex, z: C64, tau: &ModularParam, order: u32) -> Result<C64> {
    check_z(z)?;
    if !(1..=3).contains(&order) {
        return Err(Error::Argument(format!(
            "derivative order must be 1..=3, got {order}"
        )));
    }
    Ok(theta_jet(a, z, tau.tau)[order as usize])
}

/// Distance from `z` to the nearest point of `Z + tau Z`.
pub fn lattice_distance(z: C64, tau: C64) -> f64 {
    let n0 = (z.im / tau.im).round();
    let mut best = f64::INFINITY;
    for dn in -1..=1 {
        let n = n0 + dn as f64;
        let w = z - n * tau;
        let m0 = w.re.round();
        for dm in -1..=1 {
            best = best.min((w - (m0 + dm as f64)).norm());
        }
    }
    best
}

/// Theta constants and derived lattice data for a fixed `tau`.
#[derive(Debug, Clone)]
pub struct Elliptic {
    tau: C64,
    th1p: C64,
    th1ppp: C64,
    th1_5: C64,
    th0: [C64; 4],
    th0_dd: [C64; 4],
    eta: C64,
    e: [C64; 3],
}

impl Elliptic {
    pub fn new(tau: &ModularParam) -> Self {
        let t = tau.tau;
        let j1 = theta_jet_n::<6>(ThetaIndex::ONE, C64::new(0.0, 0.0), t);
        let mut th0 = [C64::new(0.0, 0.0); 4];
        let mut th0_dd = [C64::new(0.0, 0.0); 4];
        for a in [0u8, 2, 3] {
            let j = theta_jet(ThetaIndex(a), C64::new(0.0, 0.0), t);
            th0[a as usize] = j[0];
            th0_dd[a as usize] = j[2];
        }
        let eta = -j1[3] / (6.0 * j1[1]);
        let mut ell = Self {
            tau: t,
            th1p: j1[1],
            th1ppp: j1[3],
            th1_5: j1[5],
            th0,
            th0_dd,
            eta,
            e: [C64::new(0.0, 0.0); 3],
        };
        let hp = HalfPeriods::new(t);
        for k in 1..=3 {
            ell.e[k - 1] = ell.wp_unguarded(hp.omega[k]);
        }
        ell
    }

    pub fn from_tau(tau: C64) -> Result<Self> {
        Ok(Self::new(&ModularParam::new(tau)?))
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn half_periods(&self) -> HalfPeriods {
        HalfPeriods::new(self.tau)
    }

    /// `theta_1'(0)`.
    pub fn theta1_prime0(&self) -> C64 {
        self.th1p
    }

    pub fn theta1_third0(&self) -> C64 {
        self.th1ppp
    }

    /// `theta_a(0)`; zero for `a = 1`.
    pub fn theta_const(&self, a: ThetaIndex) -> C64 {
        self.th0[a.0 as usize]
    }

    /// `theta_a''(0)`; zero for `a = 1`.
    pub fn theta_const_dd(&self, a: ThetaIndex) -> C64 {
        self.th0_dd[a.0 as usize]
    }

    pub fn eta(&self) -> C64 {
        self.eta
    }

    pub fn constants(&self) -> EllipticConstants {
        EllipticConstants {
            eta: self.eta,
            e1: self.e[0],
            e2: self.e[1],
            e3: self.e[2],
        }
    }

    /// `e_k = wp(omega_k)` for k = 1, 2, 3.
    pub fn e(&self, k: usize) -> C64 {
        self.e[k - 1]
    }

    pub fn jet(&self, a: ThetaIndex, z: C64) -> [C64; 4] {
        theta_jet(a, z, self.tau)
    }

    pub fn theta(&self, a: ThetaIndex, z: C64) -> C64 {
        theta_jet(a, z, self.tau)[0]
    }

    /// `theta_a'(z) / theta_a(z)`.
    pub fn log_deriv(&self, a: ThetaIndex, z: C64) -> C64 {
        let j = self.jet(a, z);
        j[1] / j[0]
    }

    fn guard(&self, what: &str, z: C64) -> Result<()> {
        check_z(z)?;
        if lattice_distance(z, self.tau) < POLE_GUARD {
            return Err(Error::Pole {
                what: what.to_string(),
                at: z,
            });
        }
        Ok(())
    }

    /// Representative of `z` modulo the lattice, close to the origin.
    fn reduce(&self, z: C64) -> C64 {
        let n = (z.im / self.tau.im).round();
        let w = z - n * self.tau;
        w - w.re.round()
    }

    fn wp_unguarded(&self, z: C64) -> C64 {
        let j = self.jet(ThetaIndex::ONE, self.reduce(z));
        let l = j[1] / j[0];
        -(j[2] / j[0] - l * l) - 2.0 * self.eta
    }

    pub fn wp(&self, z: C64) -> Result<C64> {
        self.guard("wp", z)?;
        Ok(self.wp_unguarded(z))
    }

    pub fn wp_prime(&self, z: C64) -> Result<C64> {
        self.guard("wp'", z)?;
        let z = self.reduce(z);
        let th1 = self.theta(ThetaIndex::ONE, z);
        let num = self.theta(ThetaIndex::TWO, z)
            * self.theta(ThetaIndex::THREE, z)
            * self.theta(ThetaIndex::ZERO, z);
        let c = -2.0 * self.th1p.powi(3) / (self.th0[2] * self.th0[3] * self.th0[0]);
        Ok(c * num / (th1 * th1 * th1))
    }

    /// `wp'' = 2 sum_{j<k} (wp - e_j)(wp - e_k)`.
    pub fn wp_second(&self, z: C64) -> Result<C64> {
        let p = self.wp(z)?;
        let [e1, e2, e3] = self.e;
        Ok(2.0 * ((p - e1) * (p - e2) + (p - e1) * (p - e3) + (p - e2) * (p - e3)))
    }

    /// `wp(z) - e_k` as the theta quotient with `theta_{k+1}`.
    pub fn wp_minus_e(&self, z: C64, k: usize) -> Result<C64> {
        self.guard("wp - e_k", z)?;
        let a = ThetaIndex::new(k as i64 + 1);
        let r = self.theta(a, z) / self.theta(ThetaIndex::ONE, z);
        Ok(self.th1p * self.th1p / (self.th0[a.0 as usize] * self.th0[a.0 as usize]) * r * r)
    }

    pub fn e1(&self, z: C64) -> Result<C64> {
        self.guard("E1", z)?;
        Ok(self.log_deriv(ThetaIndex::ONE, z))
    }

    pub fn e2(&self, z: C64) -> Result<C64> {
        Ok(self.wp(z)? + 2.0 * self.eta)
    }

    pub fn phi(&self, u: C64, z: C64) -> Result<C64> {
        self.guard("Phi (u)", u)?;
        self.guard("Phi (z)", z)?;
        let t1 = |w| self.theta(ThetaIndex::ONE, w);
        Ok(t1(u + z) * self.th1p / (t1(u) * t1(z)))
    }

    /// `phi_j(z) = exp(2 pi i z d_tau omega_j) Phi(z, omega_j)`, j = 1, 2, 3.
    pub fn phi_j(&self, j: usize, z: C64) -> Result<C64> {
        if !(1..=3).contains(&j) {
            return Err(Error::Argument(format!("phi_j needs j in 1..=3, got {j}")));
        }
        let w = self.half_periods().omega[j];
        let pref = (2.0 * PI * I * z * HalfPeriods::dtau(j as i64)).exp();
        Ok(pref * self.phi(z, w)?)
    }

    /// `d_tau Phi(z, u) = kappa d_z d_u Phi(z, u)`.
    pub fn dtau_phi(&self, z: C64, u: C64) -> Result<C64> {
        let f = self.phi(z, u)?;
        let ezu = self.e1(z + u)?;
        let e2zu = self.e2(z + u)?;
        let mixed = f * ((ezu - self.e1(u)?) * (ezu - self.e1(z)?) - e2zu);
        Ok(kappa() * mixed)
    }

    /// `d_tau E1 = kappa/2 d_z (E1^2 - wp) = kappa/2 (-2 E1 E2 - wp')`.
    pub fn dtau_e1(&self, z: C64) -> Result<C64> {
        let e1 = self.e1(z)?;
        let e2 = self.e2(z)?;
        Ok(kappa() / 2.0 * (-2.0 * e1 * e2 - self.wp_prime(z)?))
    }

    /// `d_tau E2 = kappa E1 E2' - kappa E2^2 + kappa/2 wp''`.
    pub fn dtau_e2(&self, z: C64) -> Result<C64> {
        let e1 = self.e1(z)?;
        let e2 = self.e2(z)?;
        let k = kappa();
        Ok(k * e1 * self.wp_prime(z)? - k * e2 * e2 + k / 2.0 * self.wp_second(z)?)
    }

    /// `d_tau eta`, from the heat equation applied to `theta_1'(0)` and `theta_1'''(0)`.
    pub fn dtau_eta(&self) -> C64 {
        let r = self.th1ppp / self.th1p;
        -(self.th1_5 / self.th1p - r * r) / (6.0 * 4.0 * PI * I)
    }

    /// `d_tau wp(z)` at fixed z.
    pub fn dtau_wp(&self, z: C64) -> Result<C64> {
        Ok(self.dtau_e2(z)? - 2.0 * self.dtau_eta())
    }

    /// `X(z) = (wp(z) - e1)/(e2 - e1)`.
    pub fn x_coord(&self, z: C64) -> Result<C64> {
        Ok((self.wp(z)? - self.e[0]) / (self.e[1] - self.e[0]))
    }

    /// `d_tau X = kappa X' theta_0'(z)/theta_0(z)`.
    pub fn dtau_x(&self, z: C64) -> Result<C64> {
        let xz = self.wp_prime(z)? / (self.e[1] - self.e[0]);
        Ok(kappa() * xz * self.log_deriv(ThetaIndex::ZERO, z))
    }
}

pub fn eta_const(tau: &ModularParam) -> C64 {
    Elliptic::new(tau).eta()
}

pub fn wp(z: C64, tau: &ModularParam) -> Result<C64> {
    Elliptic::new(tau).wp(z)
}

pub fn wp_prime(z: C64, tau: &ModularParam) -> Result<C64> {
    Elliptic::new(tau).wp_prime(z)
}

pub fn e_values(tau: &ModularParam) -> EllipticConstants {
    Elliptic::new(tau).constants()
}

pub fn eisenstein_e1(z: C64, tau: &ModularParam) -> Result<C64> {
    Elliptic::new(tau).e1(z)
}

pub fn eisenstein_e2(z: C64, tau: &ModularParam) -> Result<C64> {
    Elliptic::new(tau).e2(z)
}

pub fn phi(u: C64, z: C64, tau: &ModularParam) -> Result<C64> {
    Elliptic::new(tau).phi(u, z)
}

pub fn phi_j(j: usize, z: C64, tau: &ModularParam) -> Result<C64> {
    Elliptic::new(tau).phi_j(j, z)
}
