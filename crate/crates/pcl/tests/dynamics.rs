use painleve_calogero::certify::hamiltonian_drift;
use painleve_calogero::config::RunConfig;
use painleve_calogero::dynamics::{
    force, hamiltonian, hamiltonian_dt, original_form_residual, potential, potential_dt, rhs,
    to_original, CalogeroState, PainleveKind, ParamSet, P5Constants,
};
use painleve_calogero::elliptic::{Elliptic, ModularParam, C64};
use painleve_calogero::{integrate, integrate::integrate_with, IntegratorOptions};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn defaults(kind: PainleveKind) -> RunConfig {
    RunConfig::default_for(RunConfig::default_params(kind))
}

/// A second parameter set for every kind.
fn alt_params(kind: PainleveKind) -> ParamSet {
    match kind {
        PainleveKind::P1 => ParamSet::P1,
        PainleveKind::P2 => ParamSet::P2 { alpha: c(-0.7, 0.2) },
        PainleveKind::P3Truncated => ParamSet::P3Truncated { nu: r(1.3) },
        PainleveKind::P3 => ParamSet::P3 { nu: r(0.5), mu: r(0.5), rho: r(-0.3) },
        PainleveKind::P4 => ParamSet::P4 { alpha: r(-1.1), beta: r(0.8) },
        PainleveKind::P5 => ParamSet::p5_from_constants(P5Constants {
            xi: r(0.1),
            zeta: c(0.6, 0.1),
            sigma: r(0.45),
        }),
        PainleveKind::P6 => ParamSet::p6_from_xi([r(0.05), r(-0.08), c(0.1, 0.05), r(-0.6)]),
    }
}

// End states at t_end of the default configs, from a 30-digit Taylor
// integrator on the same Newton equations (wp for P6 built from theta_1).
const REFERENCE: [(PainleveKind, [f64; 4]); 7] = [
    (PainleveKind::P1, [0.331180881454112636, 0.0, -0.0711133444689135170, 0.0]),
    (PainleveKind::P2, [0.558070963141547080, 0.0, 0.163308519151652315, 0.0]),
    (
        PainleveKind::P3Truncated,
        [0.509946447996435711, 0.139175804748307687, 0.739852578927663162, 0.192179378185812067],
    ),
    (PainleveKind::P3, [0.751465480574378126, 0.0, 3.49005402849921898, 0.0]),
    (PainleveKind::P4, [0.907340624755611704, 0.0, 0.413478753940153522, 0.0]),
    (
        PainleveKind::P5,
        [0.667950365347320822, 0.996691836744685896, -0.889620318112228958, 2.85726305255734711],
    ),
    (PainleveKind::P6, [0.336624057024181664, 0.0, 0.809004459968629524, 0.0]),
];

#[test]
fn end_states_match_high_precision_reference() {
    for (kind, want) in REFERENCE {
        let cfg = defaults(kind);
        let tr = integrate(&cfg.params, cfg.initial, cfg.t_end, cfg.tol).unwrap();
        let s = tr.final_state();
        assert_eq!(s.t, cfg.t_end);
        let du = (s.u - c(want[0], want[1])).norm();
        let ddu = (s.du - c(want[2], want[3])).norm();
        assert!(du < 1e-10 && ddu < 1e-9 * (1.0 + s.du.norm()), "{kind}: {du:e} {ddu:e}");
    }
}

#[test]
fn spec_point_values() {
    let p1 = ParamSet::P1;
    assert_eq!(potential(&p1, r(1.0), 2.0).unwrap(), r(-1.0));
    assert_eq!(potential(&p1, r(0.0), -3.7).unwrap(), r(0.0));
    assert_eq!(rhs(&p1, &CalogeroState::new(2.0, r(1.0), r(0.0))).unwrap(), r(2.0));
    assert_eq!(hamiltonian(&p1, &CalogeroState::new(0.0, r(0.0), r(1.0))).unwrap(), r(0.5));

    let p2 = ParamSet::P2 { alpha: r(0.0) };
    assert_eq!(hamiltonian(&p2, &CalogeroState::new(0.0, r(1.0), r(0.0))).unwrap(), r(-0.5));
    for t in [-1.0, 0.0, 2.5] {
        assert_eq!(rhs(&p2, &CalogeroState::new(t, r(0.0), r(0.4))).unwrap(), r(0.0));
    }
}

/// 20 states per kind, away from the singular set.
fn states(kind: PainleveKind) -> Vec<CalogeroState> {
    (1..=20)
        .map(|j| {
            let a = (j as f64 * 0.618_033_988_75).fract();
            let b = (j as f64 * 0.414_213_562_37).fract();
            let t = match kind {
                PainleveKind::P6 => 0.1 + 0.3 * b,
                _ => -0.5 + b,
            };
            let u = match kind {
                PainleveKind::P6 => c(0.15 + 0.3 * a, 0.1 * b),
                _ => c(0.3 + 0.7 * a, 0.4 * (b - 0.5)),
            };
            CalogeroState::new(t, u, c(0.2 * a, -0.1))
        })
        .collect()
}

#[test]
fn rhs_is_minus_potential_gradient() {
    let h = 2e-4;
    for kind in PainleveKind::ALL {
        for p in [RunConfig::default_params(kind), alt_params(kind)] {
            for s in states(kind) {
                let v = |k: f64| potential(&p, s.u + k * h, s.t).unwrap();
                let fd = -(v(-2.0) - 8.0 * v(-1.0) + 8.0 * v(1.0) - v(2.0)) / (12.0 * h);
                let f = rhs(&p, &s).unwrap();
                let e = (fd - f).norm() / (1.0 + f.norm());
                assert!(e < 1e-8, "{kind} at {s:?}: {e:e}");
            }
        }
    }
}

#[test]
fn explicit_time_derivative_of_potential() {
    let h = 1e-4;
    for kind in PainleveKind::ALL {
        let p = alt_params(kind);
        for s in states(kind) {
            let v = |t: f64| potential(&p, s.u, t).unwrap();
            let fd = (v(s.t - 2.0 * h) - 8.0 * v(s.t - h) + 8.0 * v(s.t + h) - v(s.t + 2.0 * h)) / (12.0 * h);
            let d = potential_dt(&p, s.u, s.t).unwrap();
            assert!((fd - d).norm() / (1.0 + d.norm()) < 1e-9, "{kind}");
        }
    }
}

#[test]
fn time_derivatives_of_hamiltonian_in_closed_form() {
    for s in states(PainleveKind::P1) {
        let (t, u) = (s.t, s.u);
        let d1 = hamiltonian_dt(&ParamSet::P1, &s).unwrap();
        assert!((d1 + u / 4.0).norm() < 1e-15);
        let d2 = hamiltonian_dt(&ParamSet::P2 { alpha: r(0.3) }, &s).unwrap();
        assert!((d2 - (-u * u / 2.0 - t / 4.0)).norm() < 1e-15);
        let d4 = hamiltonian_dt(&ParamSet::P4 { alpha: r(0.3), beta: r(0.2) }, &s).unwrap();
        assert!((d4 - (-u.powi(4) / 2.0 - t * u * u)).norm() < 1e-14);
    }
}

#[test]
fn hamiltonian_drift_matches_explicit_derivative() {
    for kind in PainleveKind::ALL {
        let cfg = defaults(kind);
        let tr = integrate(&cfg.params, cfg.initial, cfg.t_end, cfg.tol).unwrap();
        let (a, b) = tr.t_range();
        let times: Vec<f64> = (1..10).map(|k| a + (b - a) * k as f64 / 10.0).collect();
        let d = hamiltonian_drift(&tr, &times).unwrap();
        assert!(d < 1e-8, "{kind}: {d:e}");
    }
}

#[test]
fn p4_force_is_odd() {
    let p = ParamSet::P4 { alpha: c(0.4, 0.1), beta: r(0.3) };
    for s in states(PainleveKind::P4) {
        let f = force(&p, s.u, s.t).unwrap();
        let g = force(&p, -s.u, s.t).unwrap();
        assert!((f + g).norm() < 1e-14 * (1.0 + f.norm()));
        assert_eq!(potential(&p, s.u, s.t).unwrap(), potential(&p, -s.u, s.t).unwrap());
    }
}

#[test]
fn p5_hamiltonian_in_both_parametrizations() {
    let k = P5Constants { xi: c(0.3, 0.1), zeta: r(0.4), sigma: r(0.2) };
    let p = ParamSet::p5_from_constants(k);
    for s in states(PainleveKind::P5) {
        let (u, t) = (s.u, s.t);
        let want = s.du * s.du / 2.0 - 2.0 * (k.xi + k.sigma).powi(2) / u.sinh().powi(2)
            + 2.0 * k.zeta * k.zeta / u.cosh().powi(2)
            + (2.0 * t).exp() / 2.0 * (2.0 * k.sigma - 1.0) * (2.0 * u).cosh()
            - (4.0 * t).exp() / 16.0 * (4.0 * u).cosh();
        let got = hamiltonian(&p, &s).unwrap();
        assert!((got - want).norm() < 1e-13 * (1.0 + want.norm()));
    }
}

#[test]
fn p6_potential_from_nu_and_equal_coupling_limit() {
    let nu = [r(0.3), c(0.1, 0.2), r(-0.4), r(0.25)];
    let p = ParamSet::p6_from_nu(nu);
    assert_eq!(p.p6_nu().unwrap(), nu);
    for s in states(PainleveKind::P6) {
        let ell = Elliptic::new(&ModularParam::from_time(r(s.t)).unwrap());
        let hp = ell.half_periods();
        let mut want = r(0.0);
        for k in 0..4 {
            want -= nu[k] * ell.wp(s.u + hp.omega[k]).unwrap();
        }
        assert_eq!(potential(&p, s.u, s.t).unwrap(), want);

        let q = ParamSet::p6_from_nu([r(0.7); 4]);
        let v = potential(&q, s.u, s.t).unwrap();
        let w = -4.0 * 0.7 * ell.wp(2.0 * s.u).unwrap();
        assert!((v - w).norm() < 1e-10 * (1.0 + w.norm()), "{v} {w}");
    }
}

#[test]
fn p6_xi_sum_and_nu_map() {
    let p = ParamSet::p6_from_xi([r(0.2), r(-0.1), r(0.3), r(-0.55)]);
    let k = p.p6_constants().unwrap();
    assert!((k.xi_i.iter().sum::<C64>() - k.xi).norm() < 1e-15);
    let ParamSet::P6 { alpha, beta, gamma, delta } = p else { unreachable!() };
    let nu = p.p6_nu().unwrap();
    assert_eq!([alpha, -beta, gamma, 0.5 - delta], nu);
}

#[test]
fn global_error_order_is_at_least_four() {
    // with a loose tolerance the step is pinned at h_max
    let cfg = defaults(PainleveKind::P1);
    let want = c(REFERENCE[0].1[0], 0.0);
    let err = |h: f64| {
        let o = IntegratorOptions { tol: 1e-3, h_max: h };
        let tr = integrate_with(&cfg.params, cfg.initial, cfg.t_end, o).unwrap();
        (tr.final_state().u - want).norm()
    };
    // the pair advances the fifth-order solution, so halving gains ~32
    let (e1, e2) = (err(0.05), err(0.025));
    let ratio = e1 / e2;
    assert!((14.0..=36.0).contains(&ratio), "{e1:e} {e2:e} {ratio}");
}

#[test]
fn time_reversal_returns_initial_state() {
    for kind in [PainleveKind::P4, PainleveKind::P5, PainleveKind::P6] {
        let cfg = defaults(kind);
        let tol = 1e-11;
        let fw = integrate(&cfg.params, cfg.initial, cfg.t_end, tol).unwrap();
        let bw = integrate(&cfg.params, fw.final_state(), cfg.initial.t, tol).unwrap();
        let s = bw.final_state();
        assert_eq!(s.t, cfg.initial.t);
        assert!((s.u - cfg.initial.u).norm() < 10.0 * tol, "{kind}");
        assert!((s.du - cfg.initial.du).norm() < 10.0 * tol * (1.0 + s.du.norm()), "{kind}");
    }
}

#[test]
fn original_variables_table() {
    let s = CalogeroState::new(0.3, c(0.4, 0.1), r(0.2));
    let (y, tt) = to_original(&ParamSet::P1, &s).unwrap();
    assert_eq!((y, tt), (s.u, r(0.3)));
    let (y, tt) = to_original(&ParamSet::P2 { alpha: r(1.0) }, &s).unwrap();
    assert_eq!((y, tt), (s.u, r(0.3)));
    let (y, tt) = to_original(&ParamSet::P4 { alpha: r(1.0), beta: r(0.0) }, &s).unwrap();
    assert_eq!((y, tt), (s.u * s.u, r(0.3)));
}

#[test]
fn original_form_round_trip() {
    for kind in PainleveKind::ALL {
        for p in [RunConfig::default_params(kind), alt_params(kind)] {
            let cfg = RunConfig::default_for(p);
            let tr = integrate(&p, cfg.initial, cfg.t_end, cfg.tol).unwrap_or_else(|e| panic!("{kind}: {e}"));
            let limit = if kind == PainleveKind::P6 { 1e-6 } else { 1e-5 };
            for k in 1..10 {
                let t = cfg.initial.t + (cfg.t_end - cfg.initial.t) * k as f64 / 10.0;
                let e = original_form_residual(&tr, t, 1e-3).unwrap();
                assert!(e < limit, "{kind} {t}: {e:e}");
            }
        }
    }
}

#[test]
fn original_form_rejects_perturbed_motion() {
    // a trajectory of P2 fed to the original P2 equation with another alpha
    let cfg = defaults(PainleveKind::P2);
    let tr = integrate(&ParamSet::P2 { alpha: r(0.4) }, cfg.initial, cfg.t_end, cfg.tol).unwrap();
    let ok = original_form_residual(&tr, 0.25, 1e-3).unwrap();
    let tr2 = integrate(&ParamSet::P2 { alpha: r(0.3) }, cfg.initial, cfg.t_end, cfg.tol).unwrap();
    assert!(ok < 1e-8 && original_form_residual(&tr2, 0.25, 1e-3).unwrap() < 1e-8);
    let s = tr.state_at(0.25).unwrap();
    let y2 = rhs(&ParamSet::P2 { alpha: r(0.3) }, &s).unwrap();
    assert!((y2 - rhs(&ParamSet::P2 { alpha: r(0.4) }, &s).unwrap()).norm() > 0.09);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_kinetic_plus_potential(re in -1.0f64..1.0, im in -0.5f64..0.5, v in -2.0f64..2.0, t in -1.0f64..1.0) {
        let u = c(0.05 + re.abs(), im);
        let s = CalogeroState::new(t, u, r(v));
        for p in [ParamSet::P1, ParamSet::P2 { alpha: r(0.3) }, ParamSet::P4 { alpha: r(0.4), beta: r(0.3) }] {
            let h = hamiltonian(&p, &s).unwrap();
            prop_assert!((h - v * v / 2.0 - potential(&p, u, t).unwrap()).norm() < 1e-12 * (1.0 + h.norm()));
        }
    }
}
