//! Commands behind the `pcl` binary. Every command writes its files into
//! the output directory and returns an exit code.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::certify::{
    hamiltonian_drift, run_suites, CertifyOptions, Check, Lab, Rule, Suite, DRIFT_STEP,
};
use crate::config::RunConfig;
use crate::cser::cell;
use crate::correspondence::{pipeline_potential, shift_params};
use crate::dynamics::{hamiltonian, potential, CalogeroState};
use crate::error::{Error, Result};
use crate::integrate::{integrate_partial, IntegratorOptions, Trajectory};
use crate::transport::{schrodinger_residual, write_sweep_csv, HamiltonianIntegral, SchrodingerOptions, UniformGrid};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Ceiling of the trajectory summary's `H_drift_check`.
pub const DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Trajectory,
    Certify,
    Plotdata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Elliptic,
    Lax,
    Correspondence,
    Transport,
    All,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Elliptic => vec![Suite::Elliptic],
            SuiteArg::Lax => vec![Suite::Lax],
            SuiteArg::Correspondence => vec![Suite::Correspondence],
            SuiteArg::Transport => vec![Suite::Transport],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            SuiteArg::Elliptic => "elliptic",
            SuiteArg::Lax => "lax",
            SuiteArg::Correspondence => "correspondence",
            SuiteArg::Transport => "transport",
            SuiteArg::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotArg {
    Potential,
    Separation,
    ResidualSweep,
}

/// Certification lab for the Painleve-Calogero correspondence.
#[derive(Debug, Parser)]
#[command(name = "pcl", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Suite to run (certify only).
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    pub suite: SuiteArg,
    /// Data set to emit (plotdata only).
    #[arg(long, value_enum)]
    pub what: Option<PlotArg>,
    /// Output directory, overriding the config's `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop the quantum parameter shift (debugging aid).
    #[arg(long, hide = true)]
    pub no_shift: bool,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Run one command; errors are reported on stderr and mapped to exit codes.
pub fn run(args: &Args) -> i32 {
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pcl: {e}");
            return exit_code(&e);
        }
    };
    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let r = fs::create_dir_all(&out).map_err(Error::from).and_then(|_| match args.command {
        Command::Trajectory => cmd_trajectory(&cfg, &out),
        Command::Certify => cmd_certify(&cfg, args.suite, !args.no_shift, &out),
        Command::Plotdata => match args.what {
            Some(w) => cmd_plotdata(&cfg, w, &out),
            None => Err(Error::Config("plotdata needs --what".into())),
        },
    });
    match r {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pcl: {e}");
            exit_code(&e)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    kind: crate::PainleveKind,
    initial_state: CalogeroState,
    final_state: CalogeroState,
    t_end_requested: f64,
    completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    stopped: Option<String>,
    nodes: usize,
    #[serde(rename = "H_drift_check")]
    h_drift_check: Check,
}

/// Times of `traj` that leave room for the 5-point stencil of the drift check.
fn drift_times(traj: &Trajectory) -> Vec<f64> {
    let (lo, hi) = traj.t_range();
    let pad = 2.0 * DRIFT_STEP;
    traj.nodes()
        .iter()
        .map(|n| n.t)
        .filter(|&t| t - pad >= lo && t + pad <= hi)
        .collect()
}

/// Integrate, write `trajectory.csv` and `trajectory_summary.json`. A
/// blow-up still writes both files, for the part that was computed.
pub fn cmd_trajectory(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let (traj, stop) = integrate_partial(&cfg.params, cfg.initial, cfg.t_end, IntegratorOptions::with_tol(cfg.tol))?;
    traj.write_csv(BufWriter::new(File::create(out.join("trajectory.csv"))?))?;
    let drift = hamiltonian_drift(&traj, &drift_times(&traj))?;
    let check = Check::new("H_drift", drift, Rule::AtMost(DRIFT_LIMIT));
    let pass = check.pass;
    let summary = TrajectorySummary {
        kind: cfg.kind(),
        initial_state: traj.initial_state(),
        final_state: traj.final_state(),
        t_end_requested: cfg.t_end,
        completed: stop.is_none(),
        stopped: stop.as_ref().map(|e| e.to_string()),
        nodes: traj.nodes().len(),
        h_drift_check: check,
    };
    write_json(&out.join("trajectory_summary.json"), &summary)?;
    if let Some(e) = stop {
        return Err(e);
    }
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

/// Run the chosen suites and write `certify_<suite>.json`.
pub fn cmd_certify(cfg: &RunConfig, suite: SuiteArg, shift: bool, out: &Path) -> Result<i32> {
    let rep = run_suites(cfg, &suite.suites(), &CertifyOptions { shift })?;
    write_json(&out.join(format!("certify_{}.json", suite.name())), &rep)?;
    for s in &rep.suites {
        println!("{:<15} {}", serde_json::to_value(s.suite)?.as_str().unwrap_or(""), if s.pass { "pass" } else { "FAIL" });
        for c in s.failures() {
            println!("  {} = {:e} ({:?})", c.name, c.value, c.rule);
        }
    }
    Ok(if rep.pass { EXIT_PASS } else { EXIT_FAIL })
}

/// Write `plot_<what>.csv`. The `x` column is the real part of the grid
/// point; the imaginary part is the config's `grid.im` throughout.
pub fn cmd_plotdata(cfg: &RunConfig, what: PlotArg, out: &Path) -> Result<i32> {
    let t = cfg.t_probe;
    let name = match what {
        PlotArg::Potential => "potential",
        PlotArg::Separation => "separation",
        PlotArg::ResidualSweep => "residual_sweep",
    };
    let path = out.join(format!("plot_{name}.csv"));
    match what {
        PlotArg::Potential => {
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
            w.write_record(["x", "re_v", "im_v"])?;
            for x in cfg.grid.points() {
                // poles of V are left as empty cells
                let (re, im) = match potential(&cfg.params, x, t) {
                    Ok(v) => (cell(v.re), cell(v.im)),
                    Err(Error::Pole { .. }) => (String::new(), String::new()),
                    Err(e) => return Err(e),
                };
                w.write_record([cell(x.re), re, im])?;
            }
            w.flush()?;
        }
        PlotArg::Separation => {
            let lab = Lab::new(cfg)?;
            let p = &lab.pipeline;
            let sp = shift_params(&cfg.params).params;
            let h = hamiltonian(&cfg.params, &p.state_at(t)?)?;
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
            w.write_record(["x", "re_dev", "im_dev", "abs_dev"])?;
            for x in cfg.grid.points() {
                if !lab.clear(x, t)? {
                    continue;
                }
                let d = pipeline_potential(p, x, t)? + h - potential(&sp, x, t)?;
                w.write_record([cell(x.re), cell(d.re), cell(d.im), cell(d.norm())])?;
            }
            w.flush()?;
        }
        PlotArg::ResidualSweep => {
            let lab = Lab::new(cfg)?;
            let p = &lab.pipeline;
            let g = UniformGrid {
                x0: crate::C64::new(cfg.grid.x_min, cfg.grid.im),
                dx: cfg.grid.spacing(),
                n: cfg.grid.count,
            };
            let hint = HamiltonianIntegral::new(p)?;
            let r = schrodinger_residual(p, &hint, &g, t, cfg.steps.h_t, &SchrodingerOptions::default())?;
            write_sweep_csv(&r, BufWriter::new(File::create(&path)?))?;
        }
    }
    Ok(EXIT_PASS)
}
