use std::f64::consts::PI;

use lshoot_core::geometry::{
    complete_curve, mirrored_cylinder_curve, open_curve, plane_curve, reflect_close_with, CLOSURE_TOL,
};
use lshoot_core::integrate::EventRecord;
use lshoot_core::{
    curvature_profile, find_cylinder_delta, find_torus_deltas, integrate, reflect_close, revolve_mesh, Error,
    EventKind, IntegratorControls, Params, ProfileState, Sample, Termination, Trajectory,
};

fn torus_shots() -> (Trajectory, Trajectory) {
    let (lo, hi) = find_torus_deltas(&Params::new(2, -0.24).unwrap(), 1e-12, &IntegratorControls::default()).unwrap();
    (lo.trajectory.unwrap(), hi.trajectory.unwrap())
}

#[test]
fn reflected_torus_profiles_close_and_are_symmetric() {
    let (a, b) = torus_shots();
    for traj in [a, b] {
        let curve = reflect_close(&traj).unwrap();
        assert!(curve.closed && curve.closure_error < 1e-6);
        assert!(curve.is_simple(1e-11));
        let pts = &curve.points;
        let s1 = pts[pts.len() / 2].state.s;
        let m = pts.len();
        assert_eq!(m % 2, 1);
        for i in (0..m).filter(|&i| i != m / 2) {
            let (p, q) = (pts[i].state, pts[m - 1 - i].state);
            assert_eq!(p.x, -q.x);
            assert_eq!(p.r, q.r);
            assert!((p.s - (2.0 * s1 - q.s)).abs() < 1e-12);
        }
        let (first, last) = (pts[0].state, pts[m - 1].state);
        assert!((first.x - last.x).abs() < 1e-12 && (first.r - last.r).abs() < 1e-12);
        assert!(pts.iter().all(|p| p.state.r > 0.0));
        let mesh = revolve_mesh(&curve, 64).unwrap();
        assert!(mesh.is_watertight());
        assert_eq!(mesh.euler_characteristic(), 0);
    }
}

#[test]
fn curvature_residual_vanishes_along_shots() {
    let c = IntegratorControls::default();
    for &(n, l, d) in &[(2, -0.24, 0.3), (3, 0.0, 0.4), (2, -0.4, 0.05)] {
        let params = Params::new(n, l).unwrap();
        let traj = integrate(d, &params, &c).unwrap();
        let curve = open_curve(&traj);
        let k = curvature_profile(&curve, &params).unwrap();
        for (s, p) in k.iter().zip(&curve.points) {
            assert!(s.residual.abs() < 1e-8);
            assert!((s.kappa_prof - p.theta_dot).abs() < 1e-12);
            assert!((s.h - (s.kappa_prof + (n - 1) as f64 * s.kappa_rot)).abs() < 1e-12);
        }
    }
}

#[test]
fn cylinder_shot_curve_has_small_residual() {
    let r = find_cylinder_delta(&Params::new(2, -0.4).unwrap(), 1e-10, &IntegratorControls::default()).unwrap();
    let traj = r.trajectory.unwrap();
    let k = curvature_profile(&open_curve(&traj), &traj.params).unwrap();
    assert!(k.iter().all(|s| s.residual.abs() < 1e-8));
    let full = complete_curve(&traj);
    let m = full.points.len();
    for i in 0..m {
        let (p, q) = (full.points[i].state, full.points[m - 1 - i].state);
        assert_eq!((p.x, p.r, p.theta), (-q.x, q.r, -q.theta));
        assert!((p.s + q.s).abs() < 1e-12);
    }
    let kf = curvature_profile(&full, &traj.params).unwrap();
    assert!(kf.iter().all(|s| s.residual.abs() < 1e-8));
}

#[test]
fn type_two_shot_is_not_closable() {
    let params = Params::new(2, -0.24).unwrap();
    let traj = integrate(0.01, &params, &IntegratorControls::default()).unwrap();
    match reflect_close(&traj) {
        Err(Error::NotClosable { theta_gap, .. }) => assert!((theta_gap - PI).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn synthetic_offset_is_reported() {
    let params = Params::new(2, 0.0).unwrap();
    let mk = |s: f64, x: f64, r: f64, theta: f64| Sample {
        state: ProfileState::new(s, x, r, theta),
        theta_dot: 1.0,
    };
    let end = mk(3.0, 0.1, 2.0, PI);
    let samples = vec![mk(0.0, 0.0, 0.5, 0.0), mk(1.5, 0.6, 1.5, 1.5), end];
    let event = EventRecord {
        kind: EventKind::ThetaPi,
        s: 3.0,
        state: end.state,
        theta_dot: 1.0,
        direction: 1,
    };
    let traj = Trajectory::from_parts(
        samples,
        vec![event],
        Termination::EventStop {
            event: EventKind::ThetaPi,
        },
        params,
        0.5,
    );
    match reflect_close_with(&traj, CLOSURE_TOL, 1e-11) {
        Err(Error::NotClosable { x_at_s1, theta_gap }) => {
            assert_eq!(x_at_s1, 0.1);
            assert_eq!(theta_gap, 0.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn distinct_tori_have_distinct_radius_ranges() {
    let (a, b) = torus_shots();
    let (sa, sb) = (reflect_close(&a).unwrap().stats(), reflect_close(&b).unwrap().stats());
    assert!((sa.min_r - sb.min_r).abs() > 1e-3 || (sa.max_r - sb.max_r).abs() > 1e-3);
    assert!(sa.area > 0.0 && sb.area > 0.0);
}

#[test]
fn exact_families_have_zero_residual() {
    for n in [2, 3] {
        for l in [-0.4, 0.0, 0.4] {
            let params = Params::new(n, l).unwrap();
            for curve in [
                plane_curve(&params, 0.2, 3.0, 100),
                mirrored_cylinder_curve(&params, 2.0, 100),
            ] {
                let k = curvature_profile(&curve, &params).unwrap();
                assert!(k.iter().all(|s| s.residual.abs() < 1e-13));
            }
        }
    }
}
