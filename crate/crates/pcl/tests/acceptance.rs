//! One line per acceptance criterion. Runs without the test harness so the
//! lines always reach stdout; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use painleve_calogero::certify::{
    correspondence_suite, elliptic_suite, lax_suite, run_suites, transport_suite, CertifyOptions, Check, Lab, Suite,
    SuiteReport,
};
use painleve_calogero::config::RunConfig;
use painleve_calogero::dynamics::P5Constants;
use painleve_calogero::{CalogeroState, PainleveKind, ParamSet, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn configs(kind: PainleveKind) -> Vec<RunConfig> {
    let alt = match kind {
        PainleveKind::P1 => ParamSet::P1,
        PainleveKind::P2 => ParamSet::P2 { alpha: c(-0.7, 0.2) },
        PainleveKind::P3Truncated => ParamSet::P3Truncated { nu: r(1.3) },
        PainleveKind::P3 => ParamSet::P3 { nu: r(0.5), mu: r(0.5), rho: r(-0.3) },
        PainleveKind::P4 => ParamSet::P4 { alpha: r(-1.1), beta: r(0.8) },
        PainleveKind::P5 => ParamSet::p5_from_constants(P5Constants { xi: r(0.1), zeta: c(0.6, 0.1), sigma: r(0.45) }),
        PainleveKind::P6 => ParamSet::p6_from_xi([r(0.05), r(-0.08), c(0.1, 0.05), r(-0.6)]),
    };
    let mut b = RunConfig::default_for(alt);
    if kind == PainleveKind::P1 {
        b.initial = CalogeroState::new(0.0, c(-0.3, 0.2), r(0.5));
    }
    vec![RunConfig::default_for(RunConfig::default_params(kind)), b]
}

/// Outcome of one criterion: failing checks (labelled) and a short note.
#[derive(Default)]
struct Verdict {
    failed: Vec<String>,
    checked: usize,
    notes: Vec<String>,
}

impl Verdict {
    fn take(&mut self, label: &str, checks: impl IntoIterator<Item = Check>) {
        for ch in checks {
            self.checked += 1;
            if !ch.pass {
                self.failed.push(format!("{label}:{}={:e}", ch.name, ch.value));
            }
        }
    }

    fn require(&mut self, label: &str, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed.push(label.to_string());
        }
    }

    fn within(&mut self, label: &str, took: Duration, limit: f64) {
        self.notes.push(format!("{label} {:.2}s", took.as_secs_f64()));
        self.require(&format!("{label} runtime {:.1}s > {limit}s", took.as_secs_f64()), took.as_secs_f64() < limit);
    }

    fn line(&self, n: usize, title: &str) -> bool {
        let ok = self.failed.is_empty() && self.checked > 0;
        let status = if ok { "PASS" } else { "FAIL" };
        println!("criterion {n} [{status}] {title}: {} checks; {}", self.checked, self.notes.join(", "));
        for f in &self.failed {
            println!("    failed {f}");
        }
        ok
    }
}

fn picked(rep: &SuiteReport, prefixes: &[&str]) -> Vec<Check> {
    rep.checks
        .iter()
        .filter(|ch| prefixes.iter().any(|p| ch.name.starts_with(p)))
        .cloned()
        .collect()
}

fn pcl(args: &[&str], threads: &str) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_pcl"))
        .args(args)
        .env("PCL_THREADS", threads)
        .output()
        .expect("spawn pcl");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn main() -> ExitCode {
    let opts = CertifyOptions::default();
    let mut ok = true;

    // 1
    let mut v = Verdict::default();
    let start = Instant::now();
    for tau in [c(0.0, 1.0), c(0.3, 0.8)] {
        match elliptic_suite(tau, 20) {
            Ok(rep) => v.take(&format!("tau={tau}"), rep.checks),
            Err(e) => v.require(&format!("tau={tau}: {e}"), false),
        }
    }
    v.within("elliptic", start.elapsed(), 5.0);
    ok &= v.line(1, "elliptic identities below 1e-8 at tau = i, 0.3+0.8i");

    // 2, 3, 5, 7 come from the Lax suite, 4 from the correspondence suite
    let mut labs = Vec::new();
    for kind in PainleveKind::ALL {
        for (k, cfg) in configs(kind).into_iter().enumerate() {
            match Lab::new(&cfg) {
                Ok(l) => labs.push((format!("{kind}#{k}"), l)),
                Err(e) => println!("    could not build {kind}#{k}: {e}"),
            }
        }
    }
    let labs_ok = labs.len() == 2 * PainleveKind::ALL.len();
    let start = Instant::now();
    let lax: Vec<_> = labs.iter().map(|(name, l)| (name, lax_suite(l))).collect();
    let lax_time = start.elapsed();
    let per = |prefixes: &[&str]| {
        let mut v = Verdict::default();
        v.require("all parameter sets built", labs_ok);
        for (name, rep) in &lax {
            match rep {
                Ok(rep) => v.take(name, picked(rep, prefixes)),
                Err(e) => v.require(&format!("{name}: {e}"), false),
            }
        }
        v
    };
    let mut v2 = per(&["zero_curvature", "perturbed"]);
    v2.within("lax suites", lax_time, 60.0);
    ok &= v2.line(2, "zero curvature at order h_t^2, perturbed control plateaus");
    ok &= per(&["bx_equals_2B", "simple_zero"]).line(3, "b_x = 2B");

    let mut v = Verdict::default();
    v.require("all parameter sets built", labs_ok);
    for (name, l) in &labs {
        match correspondence_suite(l, &opts) {
            Ok(rep) => v.take(name, picked(&rep, &["separation"])),
            Err(e) => v.require(&format!("{name}: {e}"), false),
        }
    }
    ok &= v.line(4, "separation with shift table, unshifted control, offset = H");
    ok &= per(&["aux"]).line(5, "auxiliary integrals, ODEs and K evolution");

    // 6
    let mut v = Verdict::default();
    v.require("all parameter sets built", labs_ok);
    let start = Instant::now();
    for (name, l) in &labs {
        match transport_suite(l, &opts) {
            Ok(rep) => v.take(name, rep.checks),
            Err(e) => v.require(&format!("{name}: {e}"), false),
        }
    }
    v.within("transport", start.elapsed(), 60.0);
    ok &= v.line(6, "plaquette and Schrodinger transport");

    ok &= per(&["original_form"]).line(7, "original-form round trip below 1e-5");

    // 8
    let mut v = Verdict::default();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::TempDir::new().expect("temp dir");
    let mut total = Duration::ZERO;
    for kind in PainleveKind::ALL {
        let name = kind.name().to_lowercase();
        let cfg = configs.join(format!("{name}.json"));
        let cfg = cfg.to_str().unwrap();
        let mut outs = Vec::new();
        for threads in ["1", "4"] {
            let dir = tmp.path().join(format!("{name}-{threads}"));
            let start = Instant::now();
            let (code, _) = pcl(&["certify", "--config", cfg, "--out", dir.to_str().unwrap()], threads);
            total += start.elapsed();
            v.require(&format!("{name} certify exit {code}"), code == 0);
            outs.push(std::fs::read(dir.join("certify_all.json")).unwrap_or_default());
        }
        v.require(&format!("{name} output differs across thread counts"), !outs[0].is_empty() && outs[0] == outs[1]);
        let dir = tmp.path().join(format!("{name}-bare"));
        let (code, _) = pcl(
            &["certify", "--config", cfg, "--suite", "correspondence", "--no-shift", "--out", dir.to_str().unwrap()],
            "2",
        );
        let want = if matches!(kind, PainleveKind::P4 | PainleveKind::P5 | PainleveKind::P6) { 2 } else { 0 };
        v.require(&format!("{name} unshifted exit {code}"), code == want);
    }
    v.within("certify all, 7 configs x 2 thread counts", total, 120.0);

    let mut blow = RunConfig::default_for(ParamSet::P1);
    blow.initial = CalogeroState::new(0.0, r(1.0), r(2.0));
    blow.t_end = 5.0;
    blow.t_probe = 1.0;
    let blow_path = tmp.path().join("blow.json");
    std::fs::write(&blow_path, blow.to_json().unwrap()).unwrap();
    let out = tmp.path().join("blow");
    let code = pcl(&["trajectory", "--config", blow_path.to_str().unwrap(), "--out", out.to_str().unwrap()], "1").0;
    v.require(&format!("blow-up exit {code}"), code == 3);
    let bad_path = tmp.path().join("bad.json");
    std::fs::write(&bad_path, "{\"params\": {\"kind\": \"P9\"}}").unwrap();
    let code = pcl(&["certify", "--config", bad_path.to_str().unwrap()], "1").0;
    v.require(&format!("bad config exit {code}"), code == 4);

    // in-process determinism of the report itself
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P6));
    let a = run_suites(&cfg, &Suite::ALL, &opts).map(|r| serde_json::to_string(&r).unwrap());
    let b = run_suites(&cfg, &Suite::ALL, &opts).map(|r| serde_json::to_string(&r).unwrap());
    v.require("repeated in-process run", matches!((&a, &b), (Ok(x), Ok(y)) if x == y));
    ok &= v.line(8, "determinism, exit codes, certify all runtime");

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
