use facetflow::cahn_hoffman::{classify_facet, i_tau, quad_min, scale_field};
use facetflow::dynamics::evolve_exact;
use facetflow::field::RadialField;
use facetflow::pde::{check_order_preserving, run_flow, step_implicit};
use facetflow::profile::Profile;
use facetflow::state::{dist_tau, energy};
use facetflow::{Chi, DomainSpec, FacetSpec, FlowConfig, State};
use proptest::prelude::*;

fn cfg(tau: f64, dt: f64, t_end: f64) -> FlowConfig {
    FlowConfig {
        tau,
        dt,
        t_end,
        tol: 1e-10,
        ..FlowConfig::default()
    }
}

fn domain(annulus: bool, n: usize) -> DomainSpec {
    if annulus {
        DomainSpec::annulus(0.5, 2.0, n).unwrap()
    } else {
        DomainSpec::interval(1.0, n).unwrap()
    }
}

fn state_from(d: &DomainSpec, u: Vec<f64>, gaps: &[f64]) -> State {
    let mut s = State::with_matched_trace(d, u);
    for (v, g) in s.v.iter_mut().zip(gaps) {
        *v += g;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn implicit_step_is_a_contraction(
        annulus in any::<bool>(),
        u in prop::collection::vec(-1.0f64..1.0, 24),
        w in prop::collection::vec(-1.0f64..1.0, 24),
        gaps in prop::collection::vec(-0.5f64..0.5, 4),
        tau in 0.25f64..4.0,
        dt in 1e-3f64..0.1,
    ) {
        let d = domain(annulus, 24);
        let a = state_from(&d, u, &gaps);
        let b = state_from(&d, w, &gaps[2..]);
        let c = cfg(tau, dt, dt);
        let a1 = step_implicit(&a, &c, &d).unwrap().state;
        let b1 = step_implicit(&b, &c, &d).unwrap().state;
        let before = dist_tau(&a, &b, tau, &d).unwrap();
        let after = dist_tau(&a1, &b1, tau, &d).unwrap();
        prop_assert!(after <= before * (1.0 + 1e-9) + 1e-12, "{after} > {before}");
    }

    #[test]
    fn implicit_step_decreases_energy(
        annulus in any::<bool>(),
        u in prop::collection::vec(-1.0f64..1.0, 24),
        gaps in prop::collection::vec(-0.5f64..0.5, 2),
        dt in 1e-3f64..0.1,
    ) {
        let d = domain(annulus, 24);
        let a = state_from(&d, u, &gaps);
        let a1 = step_implicit(&a, &cfg(1.0, dt, dt), &d).unwrap().state;
        let e0 = energy(&a, &d).unwrap();
        let e1 = energy(&a1, &d).unwrap();
        prop_assert!(e1 <= e0 + 1e-12 * (1.0 + e0), "{e1} > {e0}");
    }

    #[test]
    fn flow_preserves_order(
        annulus in any::<bool>(),
        u in prop::collection::vec(-1.0f64..1.0, 20),
        bump in prop::collection::vec(0.0f64..0.5, 20),
        gaps in prop::collection::vec(0.0f64..0.3, 2),
    ) {
        let d = domain(annulus, 20);
        let a = State::with_matched_trace(&d, u.clone());
        let b = state_from(&d, u.iter().zip(&bump).map(|(x, y)| x + y).collect(), &gaps);
        prop_assert!(check_order_preserving(&a, &b, &cfg(1.0, 0.01, 0.05), &d).unwrap());
    }

    #[test]
    fn flow_commutes_with_constants(
        u in prop::collection::vec(-1.0f64..1.0, 20),
        shift in -3.0f64..3.0,
    ) {
        let d = domain(true, 20);
        let c = cfg(1.0, 0.01, 0.03);
        let a = run_flow(&State::with_matched_trace(&d, u.clone()), &c, &d).unwrap();
        let b = run_flow(&State::with_matched_trace(&d, u.iter().map(|x| x + shift).collect()), &c, &d).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for (p, q) in x.u.iter().zip(&y.u) {
                prop_assert!((q - p - shift).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn classification_is_antisymmetric_in_chi(
        r0 in 0.05f64..3.0,
        len in 0.05f64..3.0,
        tau in 0.25f64..3.0,
        matched in any::<bool>(),
    ) {
        let d = DomainSpec::annulus(r0, r0 + len + 1.0, 16).unwrap();
        let p = classify_facet(&d, &FacetSpec::new(r0, r0 + len, Chi::Plus), tau, matched).unwrap();
        let m = classify_facet(&d, &FacetSpec::new(r0, r0 + len, Chi::Minus), tau, matched).unwrap();
        prop_assert_eq!(p.lambda, -m.lambda);
        prop_assert_eq!(p.mu.map(|x| -x), m.mu);
        prop_assert_eq!(p.case, m.case);
        prop_assert_eq!(p.detached, m.detached);
    }

    #[test]
    fn boundary_layer_detaches_below_threshold(
        r0 in 0.05f64..3.0,
        len in 0.05f64..3.0,
        tau in 0.25f64..3.0,
    ) {
        prop_assume!((2.0 * r0 + len - 2.0 * tau).abs() > 1e-9);
        let d = DomainSpec::annulus(r0, r0 + len + 1.0, 16).unwrap();
        let rep = classify_facet(&d, &FacetSpec::new(r0, r0 + len, Chi::Plus), tau, true).unwrap();
        prop_assert_eq!(rep.detached, 2.0 * r0 + len < 2.0 * tau);
        if !rep.detached {
            prop_assert!((tau * rep.lambda + rep.mu.unwrap()).abs() <= 1e-12 * (1.0 + rep.lambda.abs()));
        }
    }

    #[test]
    fn quad_min_is_coherent(a in 0.1f64..5.0, b in 0.1f64..5.0, c in -5.0f64..5.0, tau in 0.1f64..5.0) {
        let (l, m) = quad_min(a, b, c, tau).unwrap();
        prop_assert!((tau * l + m).abs() <= 1e-14 * (1.0 + l.abs()));
        prop_assert!((a * l - b * m - c).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn tau_scaling_of_the_dual_functional(
        r0 in 0.2f64..1.5,
        len in 0.2f64..1.5,
        w in prop::collection::vec(-1.0f64..1.0, 9),
        tau in 0.25f64..4.0,
    ) {
        let d = DomainSpec::annulus(r0, r0 + len + 1.0, 16).unwrap();
        let f = FacetSpec::new(r0, r0 + len, Chi::Plus);
        let nodes: Vec<f64> = (0..=8).map(|k| r0 + len * k as f64 / 8.0).collect();
        let mut w = w;
        w[8] = 1.0;
        let z = RadialField::sampled(2, nodes, w).unwrap();
        let base = i_tau(&z, &f, &d, 1.0).unwrap();
        let (zt, dt) = scale_field(&z, &d, tau).unwrap();
        let scaled = i_tau(&zt, &f.scaled(tau), &dt, tau).unwrap();
        prop_assert!((scaled - base).abs() <= 1e-10 * (1.0 + base.abs()));
    }

    #[test]
    fn exact_tracker_is_odd(slope in 0.2f64..3.0, intercept in -1.0f64..1.0, annulus in any::<bool>()) {
        let d = domain(annulus, 50);
        let c = cfg(1.0, 1e-3, 0.02);
        let p = Profile::Ramp { slope, intercept };
        let a = evolve_exact(&d, &p, &c).unwrap();
        let b = evolve_exact(&d, &p.negated(), &c).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for (p, q) in x.u.iter().zip(&y.u) {
                prop_assert!((p + q).abs() <= 1e-9);
            }
        }
    }
}
