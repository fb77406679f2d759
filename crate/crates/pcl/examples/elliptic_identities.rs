//! Theta functions and the Weierstrass function at tau = i.

use painleve_calogero::{Elliptic, ModularParam, ThetaIndex, C64};

fn main() -> painleve_calogero::Result<()> {
    let ell = Elliptic::new(&ModularParam::new(C64::new(0.0, 1.0))?);
    println!("e1={:.12} e2={:.12} e3={:.12}", ell.e(1), ell.e(2), ell.e(3));
    println!("eta={:.12}  sum e_k={:.2e}", ell.eta(), (ell.e(1) + ell.e(2) + ell.e(3)).norm());

    // (wp')^2 = 4 (wp - e1)(wp - e2)(wp - e3)
    for z in [C64::new(0.2, 0.1), C64::new(0.37, 0.41), C64::new(-0.1, 0.3)] {
        let wp = ell.wp(z)?;
        let cubic = 4.0 * (wp - ell.e(1)) * (wp - ell.e(2)) * (wp - ell.e(3));
        let lhs = ell.wp_prime(z)?.powi(2);
        println!("z={z}: wp={wp:.10} ode defect {:.2e}", (lhs - cubic).norm() / lhs.norm());
    }

    // Jacobi: theta_1'(0) = pi theta_2(0) theta_3(0) theta_4(0)
    let prod = std::f64::consts::PI
        * ell.theta_const(ThetaIndex::new(2))
        * ell.theta_const(ThetaIndex::new(3))
        * ell.theta_const(ThetaIndex::ZERO);
    println!("theta_1'(0) - pi theta_2 theta_3 theta_4 = {:.2e}", (ell.theta1_prime0() - prod).norm());
    Ok(())
}
