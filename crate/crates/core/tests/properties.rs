use std::f64::consts::FRAC_PI_2;

use lshoot_core::classify::{check_radius_bounds, RadiusCheck};
use lshoot_core::formulations::{f_second, f_third, integrate_rescaled, u_second};
use lshoot_core::geometry::{cylinder_curve, flip, sphere_curve};
use lshoot_core::{
    classify_delta, convexity_check, curvature_profile, initial_theta_dot, integrate, revolve_mesh, rhs, sweep,
    theta_dot, IntegratorControls, Label, Params, ProfileState, Scan,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = Params> {
    (2u32..=5, -2.0f64..2.0).prop_map(|(n, l)| Params::new(n, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cylinder_radii_solve_their_quadratics(p in params()) {
        let r = p.cylinder_radius();
        let m = p.mirrored_cylinder_radius();
        let k = p.n_minus_one();
        prop_assert!(r > 0.0 && m > 0.0);
        prop_assert!((r * r - p.lambda * r - k).abs() < 1e-12 * (1.0 + r * r));
        prop_assert!((r * m - k).abs() < 1e-12 * k);
        let a = p.sphere_radius();
        prop_assert!((a * a + p.lambda * a - f64::from(p.n)).abs() < 1e-12 * (1.0 + a * a));
    }

    #[test]
    fn initial_turning_sign_tracks_cylinder(p in params(), frac in 0.01f64..3.0) {
        let delta = frac * p.cylinder_radius();
        prop_assume!((frac - 1.0).abs() > 1e-9);
        let v = initial_theta_dot(delta, &p).unwrap();
        prop_assert_eq!(v > 0.0, delta < p.cylinder_radius());
    }

    #[test]
    fn rhs_is_unit_speed_and_matches_theta_dot(
        p in params(), x in -5.0f64..5.0, r in 1e-3f64..10.0, theta in -7.0f64..7.0,
    ) {
        let st = ProfileState::new(0.0, x, r, theta);
        let d = rhs(&st, &p).unwrap();
        prop_assert!((d.dx * d.dx + d.dr * d.dr - 1.0).abs() < 1e-15);
        prop_assert_eq!(d.dtheta, theta_dot(&st, &p).unwrap());
    }

    #[test]
    fn graph_forms_agree_with_the_arc_length_system(
        p in params(), x in -3.0f64..3.0, r in 0.05f64..5.0, theta in 0.05f64..(FRAC_PI_2 - 0.05),
    ) {
        let td = theta_dot(&ProfileState::new(0.0, x, r, theta), &p).unwrap();
        let (sin, cos) = theta.sin_cos();
        let u2 = td / cos.powi(3);
        let u2_graph = u_second(x, r, sin / cos, &p).unwrap();
        prop_assert!((u2 - u2_graph).abs() <= 1e-9 * (1.0 + u2.abs()), "{} vs {}", u2, u2_graph);
        let f2 = -td / sin.powi(3);
        let f2_graph = f_second(r, x, cos / sin, &p).unwrap();
        prop_assert!((f2 - f2_graph).abs() <= 1e-9 * (1.0 + f2.abs()), "{} vs {}", f2, f2_graph);
    }

    #[test]
    fn f_third_is_the_derivative_of_f_second(
        p in params(), f in -2.0f64..2.0, f1 in -3.0f64..3.0, r in 0.3f64..4.0,
    ) {
        let f2 = f_second(r, f, f1, &p).unwrap();
        let h = 1e-5;
        let fwd = f_second(r + h, f + h * f1 + 0.5 * h * h * f2, f1 + h * f2, &p).unwrap();
        let bwd = f_second(r - h, f - h * f1 + 0.5 * h * h * f2, f1 - h * f2, &p).unwrap();
        let fd = (fwd - bwd) / (2.0 * h);
        let f3 = f_third(r, f1, f2, &p).unwrap();
        prop_assert!((fd - f3).abs() < 1e-4 * (1.0 + f3.abs()), "fd {} vs {}", fd, f3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rescaled_system_is_the_profile_system_in_other_units(
        n in 2u32..=3, lambda in -0.5f64..0.3, delta in 0.02f64..0.3,
    ) {
        let p = Params::new(n, lambda).unwrap();
        prop_assume!(delta < 0.9 * p.cylinder_radius());
        let c = IntegratorControls::default().with_scan(Scan::Full);
        let traj = integrate(delta, &p, &IntegratorControls { s_max: delta, ..c }).unwrap();
        let resc = integrate_rescaled(delta, &p, &[1.0], 1e-13).unwrap()[0];
        let end = traj.last().state;
        prop_assert!((delta * resc.xi - end.x).abs() < 1e-9);
        prop_assert!((delta * (1.0 + resc.rho) - end.r).abs() < 1e-9);
        prop_assert!((resc.alpha - end.theta).abs() < 1e-8);
    }

    #[test]
    fn resolved_types_respect_radius_bounds(
        n in 2u32..=3, lambda in -0.5f64..=0.0, frac in 0.002f64..0.998,
    ) {
        let p = Params::new(n, lambda).unwrap();
        let label = classify_delta(frac * p.cylinder_radius(), &p, &IntegratorControls::default()).unwrap();
        if label.label.is_type1() || label.label == Label::Type2 {
            match check_radius_bounds(&label.summary, &p) {
                RadiusCheck::Checked(v) => {
                    prop_assert!(!v.is_empty());
                    prop_assert!(v.iter().all(|b| b.satisfied), "{:?}", v);
                }
                RadiusCheck::NotApplicable => prop_assert!(false, "resolved label without s1"),
            }
        }
    }

    #[test]
    fn sweep_rows_come_back_sorted(
        fracs in proptest::collection::vec(0.01f64..0.99, 0..12),
    ) {
        let p = Params::new(2, -0.24).unwrap();
        let deltas: Vec<f64> = fracs.iter().map(|f| f * p.cylinder_radius()).collect();
        let rows = sweep(&p, &deltas, &IntegratorControls::default());
        prop_assert_eq!(rows.len(), deltas.len());
        prop_assert!(rows.windows(2).all(|w| w[0].delta <= w[1].delta));
        prop_assert!(rows.iter().all(|r| r.label.is_some()));
    }

    #[test]
    fn flipping_keeps_convexity_and_negates_residual(p in params(), count in 1usize..60) {
        let curve = sphere_curve(&p, count);
        let k = curvature_profile(&curve, &p).unwrap();
        let fk = flip(&k);
        prop_assert_eq!(convexity_check(&k).is_convex, convexity_check(&fk).is_convex);
        for (a, b) in k.iter().zip(&fk) {
            prop_assert_eq!(a.residual, -b.residual);
            prop_assert_eq!(a.h, -b.h);
        }
    }

    #[test]
    fn tube_meshes_count_and_sit_on_the_cylinder(
        lambda in -1.0f64..1.0, samples in 2usize..40, segments in 3usize..40,
    ) {
        let p = Params::new(2, lambda).unwrap();
        let mesh = revolve_mesh(&cylinder_curve(&p, 2.0, samples), segments).unwrap();
        prop_assert_eq!(mesh.faces.len(), 2 * segments * (samples - 1));
        prop_assert_eq!(mesh.vertices.len(), segments * samples);
        let r = p.cylinder_radius();
        for v in &mesh.vertices {
            prop_assert!((v[1].hypot(v[2]) - r).abs() < 1e-12);
        }
    }
}
