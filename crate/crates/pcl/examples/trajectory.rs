//! Integrate P2 in Calogero form and watch the energy balance dH/dt = dV/dt.

use painleve_calogero::dynamics::{hamiltonian, hamiltonian_dt, to_original};
use painleve_calogero::{integrate, CalogeroState, ParamSet, C64};

fn main() -> painleve_calogero::Result<()> {
    let params = ParamSet::P2 { alpha: C64::new(0.3, 0.0) };
    let start = CalogeroState::new(0.0, C64::new(0.5, 0.0), C64::new(0.1, 0.0));
    let traj = integrate(&params, start, 1.0, 1e-12)?;
    println!("{} nodes on [{}, {}]", traj.nodes().len(), traj.t_start(), traj.t_end());

    let h = 1e-4;
    for k in 1..5 {
        let t = 0.2 * k as f64;
        let s = traj.state_at(t)?;
        let fd = (hamiltonian(&params, &traj.state_at(t + h)?)? - hamiltonian(&params, &traj.state_at(t - h)?)?) / (2.0 * h);
        let (y, _) = to_original(&params, &s)?;
        println!(
            "t={t:.1} u={:.10} y={:.10} |dH/dt - dV/dt|={:.2e}",
            s.u,
            y,
            (fd - hamiltonian_dt(&params, &s)?).norm()
        );
    }
    Ok(())
}
