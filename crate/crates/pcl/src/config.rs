//! JSON run configuration of the `pcl` tool.
//!
//! Only `params` is required; every other field falls back to the defaults
//! of the chosen kind (see [`RunConfig::default_for`]).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{CalogeroState, PainleveKind, ParamSet};
use crate::elliptic::C64;
use crate::error::{Error, Result};
use crate::lax::{AuxSeeds, RhoChoice};

pub const MAX_COUNT: usize = 10_000;
pub const TOL_RANGE: (f64, f64) = (1e-12, 1e-3);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Horizontal line of spectral points `x = re + i im`, `re` in
/// `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub im: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<C64> {
        let step = if self.count > 1 {
            (self.x_max - self.x_min) / (self.count - 1) as f64
        } else {
            0.0
        };
        (0..self.count)
            .map(|k| c(self.x_min + step * k as f64, self.im))
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.count.max(2) - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSizes {
    pub h_t: f64,
    pub h_x: f64,
}

impl Default for StepSizes {
    fn default() -> Self {
        Self { h_t: 1e-3, h_x: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ParamSet,
    pub initial: CalogeroState,
    pub t_end: f64,
    pub tol: f64,
    pub grid: GridSpec,
    pub steps: StepSizes,
    pub seeds: AuxSeeds,
    #[serde(default)]
    pub rho: RhoChoice,
    /// Modular parameter of the elliptic suite.
    #[serde(with = "crate::cser")]
    pub tau: C64,
    /// Time at which certification points and plot data are taken.
    pub t_probe: f64,
    pub out_dir: PathBuf,
}

/// What a config file may contain; missing fields come from the kind's
/// defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params: ParamSet,
    initial: Option<CalogeroState>,
    t_end: Option<f64>,
    tol: Option<f64>,
    grid: Option<GridSpec>,
    steps: Option<StepSizes>,
    seeds: Option<AuxSeeds>,
    rho: Option<RhoChoice>,
    #[serde(default, with = "crate::cser::opt")]
    tau: Option<C64>,
    t_probe: Option<f64>,
    out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults: a short window away from movable poles, a 64-point grid
    /// 0.13 above the real axis, `h_t = 1e-3`, `h_x = 1e-4`, seeds 1,
    /// `tau = i`, `tol = 1e-12`.
    pub fn default_for(params: ParamSet) -> Self {
        let (initial, t_end, grid) = match params.kind() {
            PainleveKind::P1 => (CalogeroState::new(0.0, c(0.4, 0.0), c(-0.2, 0.0)), 0.5, (-0.9, 0.9)),
            PainleveKind::P2 => (CalogeroState::new(0.0, c(0.5, 0.0), c(0.1, 0.0)), 0.5, (-0.9, 0.9)),
            PainleveKind::P3Truncated => (CalogeroState::new(0.0, c(0.3, 0.1), c(0.2, 0.0)), 0.5, (-0.9, 0.9)),
            PainleveKind::P3 => (CalogeroState::new(0.0, c(0.2, 0.0), c(0.3, 0.0)), 0.5, (-0.9, 0.9)),
            PainleveKind::P4 => (CalogeroState::new(0.0, c(0.8, 0.0), c(0.1, 0.0)), 0.5, (-0.9, 0.9)),
            PainleveKind::P5 => (CalogeroState::new(0.0, c(0.6, 0.2), c(0.1, 0.0)), 0.5, (-0.9, 0.9)),
            PainleveKind::P6 => (CalogeroState::new(0.15, c(0.25, 0.0), c(0.3, 0.0)), 0.35, (0.1, 0.45)),
        };
        Self {
            params,
            initial,
            t_end,
            tol: 1e-12,
            grid: GridSpec {
                x_min: grid.0,
                x_max: grid.1,
                im: 0.13,
                count: 64,
            },
            steps: StepSizes::default(),
            seeds: AuxSeeds::default(),
            rho: RhoChoice::default(),
            tau: c(0.0, 1.0),
            t_probe: 0.5 * (initial.t + t_end),
            out_dir: PathBuf::from("out"),
        }
    }

    /// Default parameter set of each kind.
    pub fn default_params(kind: PainleveKind) -> ParamSet {
        match kind {
            PainleveKind::P1 => ParamSet::P1,
            PainleveKind::P2 => ParamSet::P2 { alpha: c(0.3, 0.0) },
            PainleveKind::P3Truncated => ParamSet::P3Truncated { nu: c(0.7, 0.0) },
            PainleveKind::P3 => ParamSet::P3 {
                nu: c(0.8, 0.0),
                mu: c(0.5, 0.0),
                rho: c(0.1, 0.0),
            },
            PainleveKind::P4 => ParamSet::P4 {
                alpha: c(0.4, 0.0),
                beta: c(0.3, 0.0),
            },
            PainleveKind::P5 => ParamSet::p5_from_constants(crate::dynamics::P5Constants {
                xi: c(0.3, 0.0),
                zeta: c(0.4, 0.0),
                sigma: c(0.2, 0.0),
            }),
            PainleveKind::P6 => ParamSet::p6_from_xi([c(0.1, 0.0), c(0.15, 0.0), c(0.12, 0.0), c(-0.77, 0.0)]),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        let d = Self::default_for(raw.params);
        let initial = raw.initial.unwrap_or(d.initial);
        let t_end = raw.t_end.unwrap_or(if raw.initial.is_some() {
            initial.t + (d.t_end - d.initial.t)
        } else {
            d.t_end
        });
        let cfg = Self {
            params: raw.params,
            initial,
            t_end,
            tol: raw.tol.unwrap_or(d.tol),
            grid: raw.grid.unwrap_or(d.grid),
            steps: raw.steps.unwrap_or(d.steps),
            seeds: raw.seeds.unwrap_or(d.seeds),
            rho: raw.rho.unwrap_or(d.rho),
            tau: raw.tau.unwrap_or(d.tau),
            t_probe: raw.t_probe.unwrap_or(0.5 * (initial.t + t_end)),
            out_dir: raw.out_dir.unwrap_or(d.out_dir),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        let s = &self.initial;
        if !(s.t.is_finite() && s.u.is_finite() && s.du.is_finite() && self.t_end.is_finite()) {
            return bad("initial state and t_end must be finite".into());
        }
        if self.t_end == s.t {
            return bad("t_end equals the initial time".into());
        }
        if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&self.tol) {
            return bad(format!("tol {} outside [{:e}, {:e}]", self.tol, TOL_RANGE.0, TOL_RANGE.1));
        }
        let g = &self.grid;
        if !(5..=MAX_COUNT).contains(&g.count) {
            return bad(format!("grid count {} outside [5, {MAX_COUNT}]", g.count));
        }
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.im.is_finite() && g.x_min < g.x_max) {
            return bad("grid needs finite x_min < x_max".into());
        }
        let h = &self.steps;
        if !(h.h_t > 0.0 && h.h_t <= 0.1 && h.h_x > 0.0 && h.h_x <= 0.1) {
            return bad("step sizes must lie in (0, 0.1]".into());
        }
        for (name, z) in [
            ("g12_0", self.seeds.g12_0),
            ("v_0", self.seeds.v_0),
            ("k_0", self.seeds.k_0),
        ] {
            if !(z.is_finite() && z.norm() > 0.0) {
                return bad(format!("seed {name} must be finite and nonzero"));
            }
        }
        if !(self.tau.im > 0.0 && self.tau.re.is_finite()) {
            return bad("tau must have positive imaginary part".into());
        }
        let (lo, hi) = (s.t.min(self.t_end), s.t.max(self.t_end));
        if !(lo..=hi).contains(&self.t_probe) {
            return bad(format!("t_probe {} outside the integration window", self.t_probe));
        }
        Ok(())
    }

    pub fn kind(&self) -> PainleveKind {
        self.params.kind()
    }
}
