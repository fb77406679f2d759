//! U(x, t) + H equals the classical potential once the parameters are
//! shifted; without the shift P5 misses by O(1).

use painleve_calogero::certify::Lab;
use painleve_calogero::config::RunConfig;
use painleve_calogero::correspondence::{separation_check, shift_params};
use painleve_calogero::PainleveKind;

fn main() -> painleve_calogero::Result<()> {
    for kind in PainleveKind::ALL {
        let cfg = RunConfig::default_for(RunConfig::default_params(kind));
        let lab = Lab::new(&cfg)?;
        let t = cfg.t_probe;
        let grid = lab.clear_grid(t, 0.05)?;
        let with = separation_check(&lab.pipeline, t, &grid, true)?;
        let bare = separation_check(&lab.pipeline, t, &grid, false)?;
        let shifted = shift_params(&cfg.params).shifted;
        println!(
            "{kind:>4}: {} points, shifted {shifted:?}: dev {:.2e}, unshifted {:.2e}, |offset - H| {:.2e}",
            with.grid_size,
            with.max_dev,
            bare.max_dev,
            (with.extracted_h - with.hamiltonian).norm()
        );
    }
    Ok(())
}
