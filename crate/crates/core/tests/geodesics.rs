use std::f64::consts::{PI, SQRT_2};

use proptest::prelude::*;
use qsoliton::chart::{Factor, FactorKind};
use qsoliton::geodesic::{distance_estimate, integrate_geodesic, unit_direction, DistanceMethod};
use qsoliton::library::{build, Params};
use qsoliton::{Chart, Expr};

fn stereographic_sphere(radius: f64) -> Chart {
    let r2 = Expr::sum_of_squares(0..2);
    let factor = Expr::num(4.0 * radius * radius) / (r2 + 1.0).powf(2.0);
    Chart::conformal("sphere", vec!["u1".into(), "u2".into()], factor).unwrap()
}

#[test]
fn equator_closes_after_one_period() {
    let chart = stereographic_sphere(SQRT_2);
    let x0 = [1.0, 0.0];
    let v0 = unit_direction(&chart, &x0, &[0.0, 1.0]).unwrap();
    let period = 2.0 * PI * SQRT_2;
    let t = integrate_geodesic(&chart, &x0, &v0, period, 1e-3).unwrap();
    assert!(!t.exited);
    let (end, vel) = t.state_at(period);
    assert!((end[0] - 1.0).abs() < 1e-6 && end[1].abs() < 1e-6, "{end:?}");
    assert!((vel[0] - v0[0]).abs() < 1e-6 && (vel[1] - v0[1]).abs() < 1e-6);
    for smp in &t.samples {
        let r: f64 = smp.point.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((r - 1.0).abs() < 1e-8);
    }
}

#[test]
fn flat_factor_geodesics_are_lines() {
    let ex = build("cylinder_shrinker", &Params::new()).unwrap();
    let chart = ex.chart();
    let x0 = [0.3, -0.2, 0.0, 0.0];
    let t = integrate_geodesic(chart, &x0, &[0.0, 0.0, 0.6, 0.8], 5.0, 1e-2).unwrap();
    for smp in &t.samples {
        assert!((smp.point[2] - 0.6 * smp.s).abs() < 1e-12);
        assert!((smp.point[3] - 0.8 * smp.s).abs() < 1e-12);
        assert!((smp.point[0] - 0.3).abs() < 1e-14 && (smp.point[1] + 0.2).abs() < 1e-14);
    }
}

#[test]
fn speed_and_frame_are_preserved_over_long_runs() {
    let ex = build("cylinder_shrinker", &Params::new()).unwrap();
    let chart = ex.chart();
    let x0 = [0.2, 0.1, 0.0, 0.0];
    let v0 = unit_direction(chart, &x0, &[0.3, -0.4, 0.5, 0.2]).unwrap();
    let t = integrate_geodesic(chart, &x0, &v0, 20.0, 1e-3).unwrap();
    assert!(!t.exited);
    assert!(t.speed_drift(chart).unwrap() < 1e-6);
    assert!(t.frame_drift(chart).unwrap() < 1e-6);
}

#[test]
fn shooting_matches_great_circle_distance() {
    let chart = stereographic_sphere(SQRT_2);
    let factor = Factor {
        kind: FactorKind::Sphere { radius: SQRT_2 },
        start: 0,
        dim: 2,
    };
    let x0 = [0.0, 0.0];
    for x in [[0.4, 0.1], [-0.7, 0.5], [1.2, -0.3], [0.05, 0.0]] {
        let d = distance_estimate(&chart, &x0, &x).unwrap();
        assert_eq!(d.method, DistanceMethod::Shooting, "{x:?}");
        assert!(d.converged);
        let exact = factor.distance(&x0, &x);
        assert!((d.value - exact).abs() < 1e-6, "{x:?}: {} vs {exact}", d.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_speed_is_conserved(dir in proptest::collection::vec(-1.0f64..1.0, 2), u in -0.8f64..0.8) {
        prop_assume!(dir.iter().any(|d| d.abs() > 0.05));
        let chart = stereographic_sphere(1.3);
        let x0 = [u, 0.5 * u];
        let v0 = unit_direction(&chart, &x0, &dir).unwrap();
        let t = integrate_geodesic(&chart, &x0, &v0, 2.0, 1e-3).unwrap();
        prop_assert!(t.speed_drift(&chart).unwrap() < 1e-6);
        prop_assert!(t.frame_drift(&chart).unwrap() < 1e-6);
    }

    #[test]
    fn sphere_distances_never_exceed_half_circumference(
        a in proptest::collection::vec(-3.0f64..3.0, 2),
        b in proptest::collection::vec(-3.0f64..3.0, 2),
        radius in 0.3f64..3.0,
    ) {
        let f = Factor { kind: FactorKind::Sphere { radius }, start: 0, dim: 2 };
        let d = f.distance(&a, &b);
        prop_assert!(d >= 0.0 && d <= PI * radius + 1e-12);
        prop_assert!((d - f.distance(&b, &a)).abs() < 1e-12);
    }
}
