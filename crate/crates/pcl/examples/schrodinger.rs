//! Transport Psi over a small (x, t) grid for P6 and check the
//! Schrodinger equation d_t Psi = Psi_xx / 2 + V Psi on it.

use painleve_calogero::certify::{schrodinger_grid, Lab};
use painleve_calogero::config::RunConfig;
use painleve_calogero::transport::{plaquette_defect, schrodinger_residual, HamiltonianIntegral, SchrodingerOptions};
use painleve_calogero::PainleveKind;

fn main() -> painleve_calogero::Result<()> {
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P6));
    let lab = Lab::new(&cfg)?;
    let p = &lab.pipeline;
    let (x, t) = (lab.anchor()?, cfg.t_probe);

    for (dx, dt) in [(0.1, 0.05), (0.05, 0.025)] {
        println!("plaquette {dx} x {dt}: defect {:.3e}", plaquette_defect(p, x, t, dx, dt, 8)?);
    }

    let hint = HamiltonianIntegral::new(p)?;
    let grid = schrodinger_grid(x);
    for shift in [true, false] {
        let o = SchrodingerOptions { shift, ..Default::default() };
        for h in [1e-2, 5e-3, 1e-3] {
            let r = schrodinger_residual(p, &hint, &grid, t, h, &o)?;
            println!("shift={shift} h_t={h:.0e}: residual {:.3e}, psi_2 elimination {:.3e}", r.residual, r.var_residual);
        }
    }
    Ok(())
}
