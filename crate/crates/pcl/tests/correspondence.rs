use painleve_calogero::certify::{correspondence_suite, CertifyOptions, Lab, ORDER_STEPS, RATIO_BAND};
use painleve_calogero::config::RunConfig;
use painleve_calogero::correspondence::{
    locate_u_from_b, locate_zero, pipeline_potential, schrodinger_potential, separation_check,
    shift_params, stationary_reduction, zero_count,
};
use painleve_calogero::dynamics::{hamiltonian, potential, CalogeroState, PainleveKind, ParamSet, P5Constants};
use painleve_calogero::elliptic::{ModularParam, Elliptic, ThetaIndex, C64};
use painleve_calogero::lax::{apply_gauge, build_p4, GaugeFactor, LaxEval, RhoChoice};
use painleve_calogero::transport::HamiltonianIntegral;
use painleve_calogero::Result;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn lab(cfg: &RunConfig) -> Lab {
    Lab::new(cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.kind()))
}

/// Parameter set of `kind` drawn from modest ranges, in the families on
/// which the pairs are written (P3 at mu = 1/2, P5 at delta = -1/2).
fn random_params(kind: PainleveKind, g: &mut ChaCha8Rng) -> ParamSet {
    let mut x = |a: f64, b: f64| r(g.random_range(a..b));
    match kind {
        PainleveKind::P1 => ParamSet::P1,
        PainleveKind::P2 => ParamSet::P2 { alpha: x(-1.0, 1.0) },
        PainleveKind::P3Truncated => ParamSet::P3Truncated { nu: x(0.3, 1.2) },
        PainleveKind::P3 => ParamSet::P3 { nu: x(0.3, 1.0), mu: r(0.5), rho: x(-0.3, 0.3) },
        PainleveKind::P4 => ParamSet::P4 { alpha: x(-1.0, 1.0), beta: x(0.0, 0.6) },
        PainleveKind::P5 => ParamSet::p5_from_constants(P5Constants {
            xi: x(0.0, 0.4),
            zeta: x(0.2, 0.6),
            sigma: x(0.0, 0.4),
        }),
        PainleveKind::P6 => {
            let xi = [x(-0.12, 0.12), x(-0.12, 0.12), x(-0.12, 0.12), r(0.0)];
            // keep xi + 1/2 small so that the pole at 0 stays weak
            let last = x(-0.6, -0.4) - xi[0] - xi[1] - xi[2];
            ParamSet::p6_from_xi([xi[0], xi[1], xi[2], last])
        }
    }
}

/// Two initial conditions per kind.
fn initials(kind: PainleveKind) -> [CalogeroState; 2] {
    let d = RunConfig::default_for(RunConfig::default_params(kind)).initial;
    let other = match kind {
        PainleveKind::P6 => CalogeroState::new(d.t, c(0.3, 0.05), r(-0.2)),
        _ => CalogeroState::new(d.t, d.u + c(0.1, 0.08), d.du - 0.15),
    };
    [d, other]
}

fn config(params: ParamSet, initial: CalogeroState) -> RunConfig {
    let mut cfg = RunConfig::default_for(params);
    cfg.t_end = initial.t + (cfg.t_end - cfg.initial.t);
    cfg.initial = initial;
    cfg.t_probe = 0.5 * (initial.t + cfg.t_end);
    cfg.grid.count = 50;
    cfg
}

#[test]
fn shift_table() {
    let p4 = shift_params(&ParamSet::P4 { alpha: r(1.0), beta: r(0.0) });
    assert_eq!(p4.params, ParamSet::P4 { alpha: r(1.0), beta: r(0.5) });
    assert_eq!(shift_params(&ParamSet::P1).params, ParamSet::P1);
    assert!(shift_params(&ParamSet::P1).shifted.is_empty());
    let p6 = shift_params(&ParamSet::P6 { alpha: r(0.0), beta: r(0.0), gamma: r(0.0), delta: r(0.0) });
    assert_eq!(
        p6.params,
        ParamSet::P6 { alpha: r(-0.125), beta: r(0.125), gamma: r(-0.125), delta: r(0.125) }
    );
    let p5 = shift_params(&ParamSet::P5 { alpha: r(1.0), beta: r(2.0), gamma: r(3.0), delta: r(-0.5) });
    assert_eq!(
        p5.params,
        ParamSet::P5 { alpha: r(0.875), beta: r(2.125), gamma: r(3.0), delta: r(-0.5) }
    );
    for p in [ParamSet::P2 { alpha: r(0.3) }, ParamSet::P3Truncated { nu: r(0.7) }, ParamSet::P3 { nu: r(0.8), mu: r(0.5), rho: r(0.1) }] {
        assert_eq!(shift_params(&p).params, p);
    }
}

#[test]
fn p1_potential_plus_hamiltonian_is_classical() {
    let cfg = RunConfig::default_for(ParamSet::P1);
    let l = lab(&cfg);
    for (x, t) in l.sample_points(10, 0.0).unwrap() {
        let h = hamiltonian(&cfg.params, &l.pipeline.state_at(t).unwrap()).unwrap();
        let got = pipeline_potential(&l.pipeline, x, t).unwrap() + h;
        let want = -x * x * x / 2.0 - t * x / 4.0;
        assert!((got - want).norm() < 1e-13, "{got} {want}");
    }
}

#[test]
fn p3_truncated_potential_is_half_determinant() {
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P3Truncated));
    let l = lab(&cfg);
    for (x, t) in l.sample_points(5, 0.0).unwrap() {
        let e = l.pipeline.eval(x, t).unwrap();
        assert_eq!(schrodinger_potential(&e, e.a_x()), 0.5 * e.det_u());
    }
}

#[test]
fn separation_with_shift_table() {
    let mut g = ChaCha8Rng::seed_from_u64(0x5eed);
    for kind in PainleveKind::ALL {
        let mut sets = vec![RunConfig::default_params(kind)];
        sets.extend((0..2).map(|_| random_params(kind, &mut g)));
        for p in sets {
            for s0 in initials(kind) {
                let l = lab(&config(p, s0));
                for k in 0..3 {
                    let t = s0.t + (l.cfg.t_end - s0.t) * (0.25 + 0.25 * k as f64);
                    let grid = l.clear_grid(t, 0.05).unwrap();
                    assert!(grid.len() >= 40, "{kind}: grid of {}", grid.len());
                    let rep = separation_check(&l.pipeline, t, &grid, true).unwrap();
                    assert!(rep.max_dev < 1e-6, "{kind} {p:?} {s0:?}: {:e}", rep.max_dev);
                    assert!((rep.extracted_h - rep.hamiltonian).norm() < 1e-8, "{kind}");
                    let bare = separation_check(&l.pipeline, t, &grid, false).unwrap();
                    if matches!(kind, PainleveKind::P4 | PainleveKind::P5 | PainleveKind::P6) {
                        assert!(bare.max_dev > 1e-3, "{kind}: unshifted {:e}", bare.max_dev);
                    } else {
                        assert_eq!(bare.max_dev, rep.max_dev);
                    }
                }
            }
        }
    }
}

#[test]
fn separation_report_fields() {
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P4));
    let l = lab(&cfg);
    let t = cfg.t_probe;
    let grid = l.clear_grid(t, 0.05).unwrap();
    let rep = separation_check(&l.pipeline, t, &grid, true).unwrap();
    let v = serde_json::to_value(&rep).unwrap();
    for key in ["kind", "t", "params", "shifted_params", "max_dev", "offset", "grid_size"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(rep.grid_size, grid.len());
    assert_eq!(rep.shifted_params, shift_params(&cfg.params).params);
    assert!(separation_check(&l.pipeline, t, &[], true).is_err());
}

#[test]
fn potential_does_not_depend_on_the_trajectory() {
    for kind in PainleveKind::ALL {
        let p = RunConfig::default_params(kind);
        let [a, b] = initials(kind).map(|s| lab(&config(p, s)));
        let t = a.cfg.t_probe;
        let (sa, sb) = (a.pipeline.state_at(t).unwrap(), b.pipeline.state_at(t).unwrap());
        let (ha, hb) = (hamiltonian(&p, &sa).unwrap(), hamiltonian(&p, &sb).unwrap());
        assert!((ha - hb).norm() > 1e-2, "{kind}: the two motions are too close");
        for x in a.clear_grid(t, 0.05).unwrap() {
            if !b.clear(x, t).unwrap() {
                continue;
            }
            let ua = pipeline_potential(&a.pipeline, x, t).unwrap() + ha;
            let ub = pipeline_potential(&b.pipeline, x, t).unwrap() + hb;
            assert!((ua - ub).norm() < 1e-6, "{kind} at {x}: {:e}", (ua - ub).norm());
        }
    }
}

#[test]
fn p4_mirror_zero_gives_the_same_potential() {
    let (al, be) = (r(0.4), r(0.3));
    let s = CalogeroState::new(0.2, c(0.7, 0.1), c(0.2, -0.05));
    let m = CalogeroState::new(s.t, -s.u, -s.du);
    for x in [c(0.3, 0.2), c(-0.5, 0.1), r(1.1)] {
        let e = build_p4(&s, al, be, x).unwrap();
        let f = build_p4(&m, al, be, x).unwrap();
        let (ue, uf) = (schrodinger_potential(&e, e.a_x()), schrodinger_potential(&f, f.a_x()));
        assert!((ue - uf).norm() < 1e-13 * (1.0 + ue.norm()));
    }

    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P4));
    let l = lab(&cfg);
    let t = cfg.t_probe;
    let u = l.pipeline.state_at(t).unwrap().u;
    let z = locate_u_from_b(&l.pipeline, t, -u + c(0.03, -0.02), 0.1).unwrap();
    assert!((z + u).norm() < 1e-12, "{z} {u}");
}

#[test]
fn zero_of_b_recovers_u() {
    for kind in PainleveKind::ALL {
        let cfg = RunConfig::default_for(RunConfig::default_params(kind));
        let l = lab(&cfg);
        for (_, t) in l.sample_points(4, 0.0).unwrap() {
            let u = l.pipeline.state_at(t).unwrap().u;
            let z = locate_u_from_b(&l.pipeline, t, u + c(0.02, 0.01), 0.08).unwrap();
            assert!((z - u).norm() < 1e-8, "{kind}: {:e}", (z - u).norm());
        }
    }
    // P1: b = x - u, the first Newton step lands on u
    let cfg = RunConfig::default_for(ParamSet::P1);
    let l = lab(&cfg);
    let t = cfg.t_probe;
    let u = l.pipeline.state_at(t).unwrap().u;
    let e = l.pipeline.eval(u + 0.05, t).unwrap();
    assert!((u + 0.05 - e.b() / e.b_x() - u).norm() < 1e-15);
}

#[test]
fn zero_of_b_is_gauge_invariant() {
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P5));
    let l = lab(&cfg);
    let t = cfg.t_probe;
    let u = l.pipeline.state_at(t).unwrap().u;
    let gauged = |x: C64, t: f64| -> Result<LaxEval> {
        let lw = 0.4 * x + 0.1 * x * x;
        let g = GaugeFactor { omega2: (2.0 * lw).exp(), dx_log: 0.4 + 0.2 * x, dxx_log: r(0.2), dt_log: r(0.0) };
        Ok(apply_gauge(&l.pipeline.eval(x, t)?, &g))
    };
    let center = u + c(0.02, -0.01);
    assert_eq!(zero_count(&gauged, t, center, 0.08).unwrap(), 1);
    let z0 = locate_u_from_b(&l.pipeline, t, center, 0.08).unwrap();
    let z1 = locate_zero(&gauged, t, center, 0.08).unwrap();
    assert!((z0 - z1).norm() < 1e-12);
}

#[test]
fn stationary_relations_and_fuchs_garnier_order() {
    for kind in PainleveKind::ALL {
        let cfg = RunConfig::default_for(RunConfig::default_params(kind));
        let l = lab(&cfg);
        for (x, t) in l.sample_points(3, 0.05).unwrap() {
            let s = stationary_reduction(&l.pipeline, x, t, cfg.steps.h_t).unwrap();
            assert!(s.w_relation < 1e-6, "{kind}: {:e}", s.w_relation);
            let a = stationary_reduction(&l.pipeline, x, t, ORDER_STEPS.0).unwrap().fg_residual;
            let b = stationary_reduction(&l.pipeline, x, t, ORDER_STEPS.1).unwrap().fg_residual;
            let q = a / b;
            assert!((RATIO_BAND.0..=RATIO_BAND.1).contains(&q), "{kind} at ({x}, {t}): {a:e} {b:e}");
        }
    }
}

#[test]
fn stationary_reduction_refuses_the_apparent_singularity() {
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P2));
    let l = lab(&cfg);
    let t = cfg.t_probe;
    let u = l.pipeline.state_at(t).unwrap().u;
    assert!(stationary_reduction(&l.pipeline, u + 0.001, t, 1e-3).is_err());
}

#[test]
fn hamiltonian_integral_rate() {
    for kind in PainleveKind::ALL {
        let cfg = RunConfig::default_for(RunConfig::default_params(kind));
        let l = lab(&cfg);
        let q = HamiltonianIntegral::new(&l.pipeline).unwrap();
        let h = 1e-3;
        for (_, t) in l.sample_points(4, 0.01).unwrap() {
            let d = (q.at(&l.pipeline, t - 2.0 * h).unwrap() - 8.0 * q.at(&l.pipeline, t - h).unwrap()
                + 8.0 * q.at(&l.pipeline, t + h).unwrap()
                - q.at(&l.pipeline, t + 2.0 * h).unwrap())
                / (12.0 * h);
            let want = hamiltonian(&cfg.params, &l.pipeline.state_at(t).unwrap()).unwrap();
            assert!((d - want).norm() < 1e-8 * (1.0 + want.norm()), "{kind}");
        }
    }
}

#[test]
fn p6_literal_rho_leaves_theta_constant_offset() {
    let mut cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P6));
    cfg.rho = RhoChoice::Plain;
    let l = lab(&cfg);
    // 3 d_t log theta_0(0), mpmath at 30 digits
    for (t, oracle) in [(0.2, 2.377032034184641), (0.25, 0.8642017274715655), (0.3, 0.3191733418877292)] {
        let grid = l.clear_grid(t, 0.05).unwrap();
        let rep = separation_check(&l.pipeline, t, &grid, true).unwrap();
        assert!(rep.max_dev_after_offset < 1e-6);
        let lt0 = |s: f64| {
            Elliptic::new(&ModularParam::from_time(r(s)).unwrap())
                .theta_const(ThetaIndex::ZERO)
                .ln()
        };
        let h = 1e-4;
        let want = 3.0 * (lt0(t - 2.0 * h) - 8.0 * lt0(t - h) + 8.0 * lt0(t + h) - lt0(t + 2.0 * h)) / (12.0 * h);
        assert!((rep.offset - want).norm() < 1e-7, "{} {want}", rep.offset);
        assert!((want - oracle).norm() < 1e-7, "{want}");
        assert!((rep.offset - oracle).norm() < 1e-7);
    }
}

#[test]
fn p5_offset_is_the_unshifted_hamiltonian() {
    let cfg = RunConfig::default_for(RunConfig::default_params(PainleveKind::P5));
    let l = lab(&cfg);
    let t = cfg.t_probe;
    let s = l.pipeline.state_at(t).unwrap();
    let sp = shift_params(&cfg.params).params;
    for x in l.clear_grid(t, 0.05).unwrap() {
        let h = potential(&sp, x, t).unwrap() - pipeline_potential(&l.pipeline, x, t).unwrap();
        let want = hamiltonian(&cfg.params, &s).unwrap();
        assert!((h - want).norm() < 1e-8, "{h} {want}");
    }
}

#[test]
fn correspondence_suite_passes_on_defaults() {
    for kind in PainleveKind::ALL {
        let cfg = RunConfig::default_for(RunConfig::default_params(kind));
        let rep = correspondence_suite(&lab(&cfg), &CertifyOptions::default()).unwrap();
        let bad: Vec<_> = rep.failures().map(|c| (c.name.clone(), c.value)).collect();
        assert!(rep.pass, "{kind}: {bad:?}");
    }
}
