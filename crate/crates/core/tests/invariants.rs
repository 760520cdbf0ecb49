use std::f64::consts::PI;

use hllk_core::canonical::{
    angular_momentum_m, canonical_rhs, hamiltonian, lagrangian, momenta, polar_angle_range, structure_identities_residual,
    CanonicalState, EulerAngles,
};
use hllk_core::maxwell::{
    analyze, energy_parseval, evolve, helicity_eigensystem, maxwell_residual, mode_spectrum, v_dot_p, FieldState,
    Helicity, Mode,
};
use hllk_core::phase_flow::{
    degenerate_initial_point, flow_map_steps, phase_hamiltonian, transport_density_action_steps, DegenerateFamily,
    PhasePoint,
};
use hllk_core::so3::{delta_bracket, emergent_constant};
use hllk_core::{Constants, Vec3};
use num_complex::Complex64;
use proptest::prelude::*;

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    proptest::array::uniform3(-scale..scale).prop_map(Vec3::from)
}

fn regular_alpha(min_sin: f64) -> impl Strategy<Value = EulerAngles> {
    (0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI)
        .prop_filter("away from the poles", move |(t, _, _)| t.sin() > min_sin)
        .prop_map(|(t, p, s)| EulerAngles::new(t, p, s))
}

/// Phase points whose polar angle stays inside `[0.4, π − 0.4]` under the flow.
fn safe_point() -> impl Strategy<Value = PhasePoint> {
    (regular_alpha(0.3), vec3(1.0), vec3(1.0), vec3(1.0))
        .prop_filter("polar angle bounded away from the poles", |(alpha, omega, _, _)| {
            let (lo, hi) = polar_angle_range(alpha, omega);
            lo >= 0.4 && hi <= PI - 0.4
        })
        .prop_map(|(alpha, omega, u, pi)| PhasePoint::new(u, omega, alpha, pi))
}

fn transverse_modes() -> impl Strategy<Value = Vec<Mode>> {
    proptest::collection::btree_map(
        (proptest::array::uniform3(-3i64..=3), prop_oneof![Just(Helicity::Plus), Just(Helicity::Minus)])
            .prop_filter("p ≠ 0", |(n, _)| *n != [0, 0, 0]),
        (-1.0..1.0, -1.0..1.0),
        1..12,
    )
    .prop_map(|m| m.into_iter().map(|((n, a), (re, im))| Mode::new(n, a, Complex64::new(re, im))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn structure_identities_hold(alpha in regular_alpha(0.05)) {
        let (a, b) = structure_identities_residual(&alpha).unwrap();
        prop_assert!(a <= 1e-10 && b <= 1e-10);
    }

    #[test]
    fn legendre_consistency(alpha in regular_alpha(0.1), x_dot in vec3(2.0), alpha_dot in vec3(2.0)) {
        let c = Constants::new(1.3, 0.6).unwrap();
        let (p, pi) = momenta(&x_dot, &alpha_dot, &alpha, &c).unwrap();
        let l = lagrangian(&x_dot, &alpha_dot, &alpha, &c).unwrap();
        let h = hamiltonian(&alpha, &p, &pi, &c);
        let legendre = p.dot(&x_dot) + pi.dot(&alpha_dot) - l;
        prop_assert!((legendre - l).abs() <= 1e-12 * (1.0 + l.abs()));
        prop_assert!((h - l).abs() <= 1e-12 * (1.0 + l.abs()));
    }

    #[test]
    fn p_is_constant_and_m_is_d0_v(alpha in regular_alpha(0.1), p in vec3(1.0), pi in vec3(2.0)) {
        let c = Constants::new(1.0, 2.5).unwrap();
        let state = CanonicalState { x: Vec3::zeros(), alpha, p, pi };
        let r = canonical_rhs(&state, &c);
        prop_assert_eq!(r.p_dot, Vec3::zeros());
        let m = angular_momentum_m(&alpha, &pi);
        prop_assert!((m - r.x_dot * c.d0()).norm() <= 1e-10 * (1.0 + m.norm()));
    }

    #[test]
    fn delta_bracket_vanishes(alpha in regular_alpha(0.05), k in 0usize..3) {
        prop_assert!(delta_bracket(&alpha, k).unwrap().abs() <= 1e-11);
    }

    #[test]
    fn c_depends_only_on_ratio(s0 in 1e-3..1e3f64, d0 in 1e-3..1e3f64, e in -20i32..20, lambda in 1e-3..1e3f64) {
        let base = emergent_constant(s0, d0).unwrap().c();
        let two = 2f64.powi(e);
        prop_assert_eq!(emergent_constant(s0 * two, d0 * two).unwrap().c(), base);
        let scaled = emergent_constant(s0 * lambda, d0 * lambda).unwrap().c();
        prop_assert!((scaled - base).abs() <= 4.0 * f64::EPSILON * base);
    }

    #[test]
    fn helicity_eigen_relations(p in vec3(5.0).prop_filter("p ≠ 0", |p| p.norm() > 1e-6)) {
        let c = Constants::new(2.0, 0.5).unwrap();
        let eig = helicity_eigensystem(&p, &c).unwrap();
        prop_assert_eq!(eig.energy(Helicity::Plus), c.c() * p.norm());
        prop_assert_eq!(eig.energy(Helicity::Minus), -c.c() * p.norm());
        for a in Helicity::ALL {
            let u = eig.vector(a);
            let r = v_dot_p(&p, u, &c) - u * Complex64::from(eig.energy(a));
            prop_assert!(r.norm() <= 1e-12 * (1.0 + c.c() * p.norm()));
        }
    }

    #[test]
    fn transverse_fields_solve_maxwell_under_evolution(
        modes in transverse_modes(),
        x in vec3(10.0),
        t in -5.0..5.0f64,
        dt in -3.0..3.0f64,
    ) {
        let c = Constants::natural();
        let field = FieldState::new(2.0 * PI, 0.0, modes).unwrap();
        for f in [field.clone(), evolve(&field, dt, &c)] {
            let r = maxwell_residual(&f, &x, t, &c);
            prop_assert!(r.curl_max() <= 1e-12 && r.div_max() <= 1e-12);
        }
        let u0 = energy_parseval(&field, &c);
        prop_assert!((energy_parseval(&evolve(&field, dt, &c), &c) - u0).abs() <= 1e-14 * u0);
    }

    #[test]
    fn analyze_inverts_synthesis(modes in transverse_modes()) {
        let c = Constants::new(0.7, 1.9).unwrap();
        let field = FieldState::new(3.0, 0.25, modes).unwrap();
        let back = analyze(3.0, 0.25, &mode_spectrum(&field, &c), &c).unwrap();
        for m in back.modes() {
            let expected = field
                .modes()
                .iter()
                .find(|o| o.n == m.n && o.helicity == m.helicity)
                .map_or(Complex64::new(0.0, 0.0), |o| o.amplitude);
            prop_assert!((m.amplitude - expected).norm() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_semigroup(y in safe_point(), t1 in 0.1..1.5f64, t2 in 0.1..1.5f64) {
        // 1000 steps per unit time in every leg
        let steps = |t: f64| (t * 1000.0).round() as usize;
        let (t1, t2) = (steps(t1) as f64 / 1000.0, steps(t2) as f64 / 1000.0);
        let direct = flow_map_steps(&y, t1 + t2, steps(t1) + steps(t2)).unwrap();
        let composed = flow_map_steps(&flow_map_steps(&y, t1, steps(t1)).unwrap(), t2, steps(t2)).unwrap();
        prop_assert!((direct.0 - composed.0).amax() <= 1e-9);
        prop_assert_eq!(direct.omega(), y.omega());
    }

    #[test]
    fn density_constant_and_action_linear(y in safe_point(), rho0 in 0.0..3.0f64, t in 0.1..3.0f64) {
        let s = transport_density_action_steps(&y, rho0, t, (t * 1000.0).ceil() as usize).unwrap();
        prop_assert_eq!(s.rho, rho0);
        let h = phase_hamiltonian(&y);
        prop_assert!((s.action - h * t).abs() <= 1e-10 * (1.0 + h.abs() * t));
    }

    #[test]
    fn degenerate_family_depends_only_on_parameters(y in safe_point(), r in -2.0..2.0f64) {
        let fam = DegenerateFamily { alpha0: y.alpha(), omega0: y.omega(), r, u0: y.u() };
        let a = flow_map_steps(&degenerate_initial_point(&fam).unwrap(), 2.0, 2000).unwrap();
        let b = flow_map_steps(&degenerate_initial_point(&fam.clone()).unwrap(), 2.0, 2000).unwrap();
        prop_assert_eq!(a, b);
    }
}
