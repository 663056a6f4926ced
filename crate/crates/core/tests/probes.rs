use proptest::prelude::*;
use qsoliton::chart::JetRegime;
use qsoliton::library::{build, rigid_factory, Params, RigidBase};
use qsoliton::probes::{
    growth_bounds, lower_bound_probe, omori_yau_conditions, omori_yau_margins, shape_operator_check, PsiSample,
};
use qsoliton::verify::{soliton_residual, CheckConfig};
use qsoliton::{Chart, Expr, QSpec, SolitonData, Verdict};

fn cfg() -> CheckConfig {
    CheckConfig::default().with_samples(64)
}

#[test]
fn gaussian_saturates_the_potential_bound() {
    let ex = build("gaussian", &Params::new()).unwrap();
    let r = growth_bounds(&ex.soliton, None, &CheckConfig::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.details["ray_f_margin_max"] < 1e-8);
    assert!(r.details["f_margin_min"] >= -1e-12);
    assert!(r.details["gradient_margin_min"] >= -1e-12);
}

#[test]
fn bach_growth_uses_the_flat_factor_constant() {
    let ex = build("bach_product", &Params::new()).unwrap();
    let s = &ex.soliton;
    let with_lambda = growth_bounds(s, None, &cfg()).unwrap();
    assert_eq!(with_lambda.verdict, Verdict::Inapplicable);
    let r = growth_bounds(s, s.big_lambda, &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.details["f_margin_min"] >= 0.0 && r.details["gradient_margin_min"] >= 0.0);
}

#[test]
fn cylinder_lower_bound_feeds_omori_yau() {
    let ex = build("cylinder_shrinker", &Params::new()).unwrap();
    let lower = lower_bound_probe(&ex.soliton, &cfg()).unwrap();
    assert_eq!(lower.verdict, Verdict::Pass);
    let c1 = lower.details["c1"];
    assert!(c1 >= lower.details["c1_min"] && c1.is_finite());
    let oy = omori_yau_conditions(&ex.soliton, &lower, &cfg()).unwrap();
    assert_eq!(oy.verdict, Verdict::Pass);
    assert_eq!(oy.details["c1"], c1);
    for key in ["growth_margin_min", "gradient_margin_min", "laplacian_margin_min"] {
        assert!(oy.details[key] >= 0.0, "{key}");
    }
}

#[test]
fn omori_yau_needs_a_passing_lower_bound() {
    let ex = build("gaussian", &Params::new().set("lambda", 0.5)).unwrap();
    let mut lower = lower_bound_probe(&ex.soliton, &cfg()).unwrap();
    lower.verdict = Verdict::Fail;
    let oy = omori_yau_conditions(&ex.soliton, &lower, &cfg()).unwrap();
    assert_eq!(oy.verdict, Verdict::Inapplicable);
    let other = build("gaussian", &Params::new().set("lambda", 0.7)).unwrap();
    let lower = lower_bound_probe(&other.soliton, &cfg()).unwrap();
    assert_eq!(
        omori_yau_conditions(&other.soliton, &lower, &cfg()).unwrap().verdict,
        Verdict::Inapplicable
    );
}

#[test]
fn exponential_test_function_fails_the_gradient_condition() {
    let samples: Vec<PsiSample> = (0..=30)
        .map(|k| {
            let r = f64::from(k);
            PsiSample {
                point: vec![r],
                r,
                psi: r.exp(),
                grad_norm: r.exp(),
                laplacian: r.exp(),
            }
        })
        .collect();
    let rep = omori_yau_margins("exp", &samples, 0.0, 1e-7, JetRegime::Exact);
    assert_eq!(rep.verdict, Verdict::Fail);
    assert!(rep.details["gradient_margin_min"] < 0.0);
    assert!(rep.details["growth_margin_min"] >= 0.0);
}

/// Flat plane with `q = −2K g`, `λ = K + ½` and `f = |x|²/4`.
fn constant_q_plane(k: f64) -> SolitonData {
    let coords = vec!["x".to_string(), "y".to_string()];
    let chart = Chart::conformal("plane", coords, Expr::num(1.0)).unwrap();
    let q = QSpec::Custom(vec![Expr::num(-2.0 * k), Expr::num(0.0), Expr::num(-2.0 * k)]);
    let f = Expr::num(0.25) * Expr::sum_of_squares(0..2);
    SolitonData::new(chart, f, k + 0.5, q).unwrap()
}

#[test]
fn large_constant_q_violates_the_lower_bound_hypothesis() {
    let s = constant_q_plane(10.0);
    assert_eq!(soliton_residual(&s, &cfg()).unwrap().verdict, Verdict::Pass);
    let r = lower_bound_probe(&s, &cfg()).unwrap();
    assert_eq!(r.verdict, Verdict::Inapplicable);
    let mild = lower_bound_probe(&constant_q_plane(0.0), &cfg()).unwrap();
    assert_eq!(mild.verdict, Verdict::Pass);
}

#[test]
fn compact_and_expanding_targets_are_out_of_scope() {
    for name in ["round_sphere", "hyperbolic_expander"] {
        let ex = build(name, &Params::new()).unwrap();
        assert_eq!(
            lower_bound_probe(&ex.soliton, &cfg()).unwrap().verdict,
            Verdict::Inapplicable
        );
        assert_eq!(
            shape_operator_check(&ex.soliton, &cfg()).unwrap().verdict,
            Verdict::Inapplicable
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rigid_products_have_two_shape_eigenvalues(
        big in 0.2f64..1.5,
        k in 1usize..3,
        slope in -1.0f64..1.0,
        offset in -1.0f64..2.0,
    ) {
        let base = RigidBase::Sphere { dim: 2, radius: (1.0 / big).sqrt() };
        let mut linear = vec![0.0; k];
        linear[0] = slope;
        let s = rigid_factory(base, k, big, &linear, offset, QSpec::Ricci, big).unwrap();
        let r = shape_operator_check(&s, &CheckConfig::default().with_samples(16)).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass);
        prop_assert!(r.details["cluster_width_max"] < 1e-6);
        prop_assert_eq!(r.details["eigenvalues_in_range"], 1.0);
        prop_assert_eq!(r.constants.big_lambda, Some(big));
    }
}
