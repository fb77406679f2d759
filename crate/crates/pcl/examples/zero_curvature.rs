//! The zero-curvature residual of the P4 pair falls as h_t^2 on the
//! Painleve motion and stalls once the velocity is perturbed.

use painleve_calogero::certify::Lab;
use painleve_calogero::config::RunConfig;
use painleve_calogero::lax::zero_curvature_residual;
use painleve_calogero::{PainleveKind, C64};

fn main() -> painleve_calogero::Result<()> {
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P4));
    let lab = Lab::new(&cfg)?;
    let off = lab.pipeline.clone().with_velocity_shift(C64::new(1e-3, 0.0))?;
    println!("{:>24} {:>6} {:>11} {:>11} {:>7} {:>11}", "x", "t", "res(h)", "res(h/2)", "ratio", "perturbed");
    for (x, t) in lab.sample_points(6, 0.01)? {
        let r = zero_curvature_residual(&lab.pipeline, x, t, 1e-3, 1e-4)?;
        let q = zero_curvature_residual(&off, x, t, 1e-3, 1e-4)?;
        println!(
            "{:>24} {t:>6.3} {:>11.3e} {:>11.3e} {:>7.3} {:>11.3e}",
            format!("{x:.4}"),
            r.residual,
            r.halved_residual,
            r.ratio(),
            q.halved_residual
        );
    }
    Ok(())
}
