//! Run every suite on the shipped configs and print a one-line verdict per
//! kind. Usage: cargo run --release --example certify [configs-dir]

use std::path::PathBuf;

use painleve_calogero::certify::{run_suites, CertifyOptions, Suite};
use painleve_calogero::config::RunConfig;

fn main() -> painleve_calogero::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs"));
    let mut paths: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for path in paths {
        let cfg = RunConfig::load(&path)?;
        let rep = run_suites(&cfg, &Suite::ALL, &CertifyOptions::default())?;
        let n: usize = rep.suites.iter().map(|s| s.checks.len()).sum();
        let bad: Vec<_> = rep.suites.iter().flat_map(|s| s.failures()).map(|c| c.name.clone()).collect();
        println!("{:>5} {} ({n} checks) {bad:?}", cfg.kind(), if rep.pass { "pass" } else { "FAIL" });
    }
    Ok(())
}
