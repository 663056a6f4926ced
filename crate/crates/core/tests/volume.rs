use std::f64::consts::PI;

use proptest::prelude::*;
use qsoliton::chart::MetricSource;
use qsoliton::library::{build, Params};
use qsoliton::verify::CheckConfig;
use qsoliton::volume::{
    build_profile, coarea_identity_check, lower_volume_check, upper_volume_check, Normalization, ProfileMethod,
    SublevelProfile,
};
use qsoliton::{Chart, SolitonData, Verdict};

fn profile(name: &str, params: Params, count: usize, r_max: f64, norm: Normalization) -> SublevelProfile {
    let ex = build(name, &params).unwrap();
    build_profile(&ex.soliton, count, r_max, norm, &CheckConfig::default())
        .unwrap()
        .unwrap()
}

fn assert_aligned(p: &SublevelProfile) {
    let m = p.radii.len();
    for v in [
        &p.volume,
        &p.volume_derivative,
        &p.trace_integral,
        &p.boundary_trace,
        &p.boundary_inverse_gradient,
        &p.volume_error,
        &p.identity_error,
    ] {
        assert_eq!(v.len(), m);
    }
}

/// `V(r) = |S²(√2)| · π(r² − 4)` for `{|x|²/4 + 1 < r²/4}`.
fn cylinder_volume(r: f64) -> f64 {
    8.0 * PI * PI * (r * r - 4.0).max(0.0)
}

#[test]
fn cylinder_profile_matches_the_product_volume() {
    let p = profile("cylinder_shrinker", Params::new(), 64, 12.0, Normalization::ShiftToZero);
    assert_eq!(p.method, ProfileMethod::ProductClosedForm);
    assert_aligned(&p);
    assert!(p.shift.abs() < 1e-8);
    for (r, v) in p.radii.iter().zip(&p.volume) {
        assert!(
            (v - cylinder_volume(*r)).abs() <= 1e-9 * cylinder_volume(*r).max(1.0),
            "r = {r}"
        );
    }
    let rep = coarea_identity_check(&p, None);
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.residual_max < 1e-6);
    assert!(rep.details["remark_margin_min"] >= 0.0);
}

#[test]
fn unnormalized_cylinder_misses_by_a_constant() {
    let p = profile(
        "cylinder_shrinker",
        Params::new().set("a", 0),
        64,
        12.0,
        Normalization::AsGiven,
    );
    let rep = coarea_identity_check(&p, None);
    assert_eq!(rep.verdict, Verdict::Fail);
    let target = 64.0 * PI * PI;
    assert!(
        (rep.residual_max - target).abs() < 0.01 * target,
        "{}",
        rep.residual_max
    );
}

#[test]
fn cylinder_volume_growth() {
    let p = profile("cylinder_shrinker", Params::new(), 64, 12.0, Normalization::ShiftToZero);
    let upper = upper_volume_check(&p);
    assert_eq!(upper.verdict, Verdict::Pass);
    let lower = lower_volume_check(&p, Some(1.0));
    assert_eq!(lower.verdict, Verdict::Pass);
    assert_eq!(lower.details["exponent"], 2.0);
    assert!(lower.details["C2"] > 0.0);
    assert_eq!(lower_volume_check(&p, Some(0.5)).verdict, Verdict::Inapplicable);
    assert_eq!(lower_volume_check(&p, Some(4.0)).verdict, Verdict::Inapplicable);
}

#[test]
fn monte_carlo_route_agrees_with_the_closed_form() {
    let ex = build("gaussian", &Params::new()).unwrap();
    let chart = ex.chart();
    let MetricSource::Expressions(entries) = chart.metric_source() else {
        panic!("gaussian metric is symbolic");
    };
    let bare = Chart::new("bare", chart.coords().to_vec(), entries.clone())
        .unwrap()
        .with_sample_box(vec![(-7.0, 7.0); 2]);
    let s = &ex.soliton;
    let mc = SolitonData::new(bare, s.f.clone(), s.lambda, s.q.clone()).unwrap();
    let p = build_profile(&mc, 16, 6.0, Normalization::ShiftToZero, &CheckConfig::default())
        .unwrap()
        .unwrap();
    assert!(matches!(p.method, ProfileMethod::MonteCarlo { .. }));
    assert_aligned(&p);
    for k in 0..p.radii.len() {
        let exact = PI * p.radii[k] * p.radii[k];
        let err = (p.volume[k] - exact).abs();
        assert!(
            err <= 4.0 * p.volume_error[k] + 1e-2 * exact,
            "r = {}: {} vs {exact}",
            p.radii[k],
            p.volume[k]
        );
    }
    assert_eq!(coarea_identity_check(&p, None).verdict, Verdict::Pass);
}

#[test]
fn gaussian_constants_are_pi() {
    let p = profile("gaussian", Params::new(), 32, 12.0, Normalization::ShiftToZero);
    let upper = upper_volume_check(&p);
    let lower = lower_volume_check(&p, None);
    assert!((upper.details["C1"] - PI).abs() < 1e-9);
    assert!((lower.details["C2"] - PI).abs() < 1e-9);
    assert_eq!(lower.details["exponent"], 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shrinking_gaussians_satisfy_the_identity(dim in 1usize..5, lambda in 0.2f64..2.0) {
        let ex = build("gaussian", &Params::new().set("dim", dim).set("lambda", lambda)).unwrap();
        let p = build_profile(&ex.soliton, 24, 10.0, Normalization::ShiftToZero, &CheckConfig::default())
            .unwrap()
            .unwrap();
        let rep = coarea_identity_check(&p, None);
        prop_assert_eq!(rep.verdict, Verdict::Pass);
        prop_assert!(rep.details["remark_margin_min"] >= 0.0);
        for w in p.volume.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }
}
