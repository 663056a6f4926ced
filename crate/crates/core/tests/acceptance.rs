use std::f64::consts::PI;
use std::time::{Duration, Instant};

use qsoliton::chart::JetRegime;
use qsoliton::library::{build, rigid_factory, Params, RigidBase};
use qsoliton::probes::{
    growth_bounds, lower_bound_probe, omori_yau_conditions, omori_yau_margins, shape_operator_check, PsiSample,
};
use qsoliton::ricatti::{ricatti_evolve, RicattiMode};
use qsoliton::runner::{run_example, RunConfig, Target};
use qsoliton::verify::{
    compact_integral, evolution_identities, hamilton_scalar, hamilton_tensor, laplacian_trace, rigidity,
    soliton_residual, CheckConfig,
};
use qsoliton::volume::{build_profile, coarea_identity_check, lower_volume_check, upper_volume_check, Normalization};
use qsoliton::{Check, Expr, SolitonData, Verdict};

const SOLITON_TOL: f64 = 1e-7;
const RUNTIME_LIMIT: Duration = Duration::from_secs(5);
const C_TOL: f64 = 1e-8;
const POINTWISE_REL: f64 = 0.01;
const LAPLACIAN_TOL: f64 = 1e-7;
const CONSISTENCY_TOL: f64 = 1e-8;
const CLUSTER_TOL: f64 = 1e-6;
const RIGID_C_REL: f64 = 1e-6;
const RICATTI_TOL: f64 = 1e-6;
const BLOW_UP_TOL: f64 = 1e-3;
const SATURATION_TOL: f64 = 1e-8;
const MARGIN_ROUNDING: f64 = 1e-12;
const COAREA_TOL: f64 = 1e-6;
const CONTROL_REL: f64 = 0.01;
const EVOLUTION_TOL: f64 = 1e-8;
const QUADRATURE_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn example(name: &str) -> SolitonData {
    build(name, &Params::new()).unwrap().soliton
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn soliton_residuals() -> Outcome {
    let cfg = CheckConfig::default();
    let mut worst: (f64, Duration) = (0.0, Duration::ZERO);
    for name in ["gaussian", "cylinder_shrinker", "bach_product"] {
        let t = Instant::now();
        let r = soliton_residual(&example(name), &cfg).map_err(|e| e.to_string())?;
        let dt = t.elapsed();
        ensure(r.samples == 256, format!("{name}: {} samples", r.samples))?;
        ensure(
            r.residual_max < SOLITON_TOL,
            format!("{name}: residual {:.3e}", r.residual_max),
        )?;
        ensure(dt < RUNTIME_LIMIT, format!("{name}: {dt:?}"))?;
        worst = (worst.0.max(r.residual_max), worst.1.max(dt));
    }
    Ok(format!("max residual {:.2e}, slowest {:.2?}", worst.0, worst.1))
}

fn hamilton_equivalence() -> Outcome {
    let cfg = CheckConfig::default();
    for name in qsoliton::library::NAMES {
        let s = example(name);
        let (_, a) = hamilton_scalar(&s, &cfg).map_err(|e| e.to_string())?;
        let b = hamilton_tensor(&s, &cfg).map_err(|e| e.to_string())?;
        ensure(
            a.verdict == b.verdict,
            format!("{name}: {} vs {}", a.verdict, b.verdict),
        )?;
    }
    let (_, cyl) = hamilton_scalar(&example("cylinder_shrinker"), &cfg).map_err(|e| e.to_string())?;
    let c = cyl.constants.hamilton.ok_or("cylinder C missing")?;
    ensure(c.abs() < C_TOL, format!("cylinder C = {c:e}"))?;
    let bach = example("bach_product");
    let c2 = bach.big_lambda.ok_or("bach Λ missing")?;
    let (_, bs) = hamilton_scalar(&bach, &cfg).map_err(|e| e.to_string())?;
    let bt = hamilton_tensor(&bach, &cfg).map_err(|e| e.to_string())?;
    ensure(
        bs.verdict == Verdict::Fail && bt.verdict == Verdict::Fail,
        "bach should fail both",
    )?;
    let (lo, hi) = (
        bt.details["residual_over_grad_min"],
        bt.details["residual_over_grad_max"],
    );
    ensure(
        (lo / c2 - 1.0).abs() < POINTWISE_REL && (hi / c2 - 1.0).abs() < POINTWISE_REL,
        format!("bach ratio [{lo}, {hi}] vs c² = {c2}"),
    )?;
    Ok(format!(
        "verdicts agree on all examples, C = {c:.1e}, bach |res|/|∇f| in [{lo:.6}, {hi:.6}] vs c² = {c2:.6}"
    ))
}

fn laplacian_of_trace() -> Outcome {
    let cfg = CheckConfig::default();
    let mut worst = (0.0f64, 0.0f64);
    for name in ["gaussian", "cylinder_shrinker"] {
        let r = laplacian_trace(&example(name), &cfg).map_err(|e| e.to_string())?;
        let eqs = r.details["with_trace_max"].max(r.details["f_laplacian_max"]);
        let consistency = r.details["ric_div_general_max"].max(r.details["route_gap_max"]);
        ensure(eqs < LAPLACIAN_TOL, format!("{name}: {eqs:e}"))?;
        ensure(
            consistency < CONSISTENCY_TOL,
            format!("{name}: consistency {consistency:e}"),
        )?;
        worst = (worst.0.max(eqs), worst.1.max(consistency));
    }
    Ok(format!(
        "identity residual {:.2e}, consistency {:.2e}",
        worst.0, worst.1
    ))
}

fn rigidity_criterion() -> Outcome {
    let cfg = CheckConfig::default();
    let mut outputs: Vec<(String, SolitonData)> = ["gaussian", "cylinder_shrinker", "rigid_generic", "bach_product"]
        .iter()
        .map(|n| (n.to_string(), example(n)))
        .collect();
    outputs.push((
        "bach_product(negative)".into(),
        build("bach_product", &Params::new().set("sign", "negative"))
            .unwrap()
            .soliton,
    ));
    for (big, k) in [(0.3f64, 1), (1.2, 3)] {
        let base = RigidBase::Sphere {
            dim: 2,
            radius: (1.0 / big).sqrt(),
        };
        let s = rigid_factory(base, k, big, &[0.4; 1].repeat(k), -0.5, qsoliton::QSpec::Ricci, big).unwrap();
        outputs.push((format!("rigid(Λ={big}, k={k})"), s));
    }
    let mut width: f64 = 0.0;
    for (name, s) in &outputs {
        let r = rigidity(s, &cfg).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Pass, format!("{name}: rigidity {}", r.verdict))?;
        let sh = shape_operator_check(s, &cfg).map_err(|e| e.to_string())?;
        ensure(
            sh.verdict == Verdict::Pass,
            format!("{name}: shape operator {}", sh.verdict),
        )?;
        let w = sh.details["cluster_width_max"];
        ensure(w < CLUSTER_TOL, format!("{name}: cluster width {w:e}"))?;
        width = width.max(w);
    }
    let cyl = rigidity(&example("cylinder_shrinker"), &cfg).map_err(|e| e.to_string())?;
    let c_cyl = cyl.constants.c.ok_or("cylinder c missing")?;
    ensure(c_cyl.abs() < C_TOL, format!("cylinder c = {c_cyl:e}"))?;
    let bach = example("bach_product");
    let c_bach = rigidity(&bach, &cfg)
        .map_err(|e| e.to_string())?
        .constants
        .c
        .ok_or("bach c missing")?;
    let expected = 2.0 * (bach.big_lambda.unwrap() - bach.lambda);
    ensure(
        (c_bach / expected - 1.0).abs() < RIGID_C_REL,
        format!("bach c = {c_bach} vs 2(Λ−λ) = {expected}"),
    )?;
    Ok(format!(
        "{} rigid outputs, cluster width {width:.1e}, c(cylinder) = {c_cyl:.1e}, c(bach) = {c_bach:.8}",
        outputs.len()
    ))
}

fn ricatti_criterion() -> Outcome {
    let mut worst: f64 = 0.0;
    for phi0 in [-1.0, -0.3, 0.5, 2.0] {
        let t = ricatti_evolve(phi0, RicattiMode::Equality, 4.0).map_err(|e| e.to_string())?;
        let e = t.closed_form_error(0.99);
        ensure(e < RICATTI_TOL, format!("φ₀ = {phi0}: {e:e}"))?;
        worst = worst.max(e);
    }
    let t = ricatti_evolve(-1.0, RicattiMode::Equality, 5.0).map_err(|e| e.to_string())?;
    let b = t.blow_up_at.ok_or("no blow-up for φ₀ = −1")?;
    ensure((b - 1.0).abs() < BLOW_UP_TOL, format!("blow-up at {b}"))?;
    Ok(format!("closed-form error {worst:.1e}, blow-up at {b:.6}"))
}

fn growth_criterion() -> Outcome {
    let cfg = CheckConfig::default().with_samples(512);
    let mut margins = Vec::new();
    for name in ["gaussian", "cylinder_shrinker", "bach_product"] {
        let s = example(name);
        let gamma = if name == "bach_product" { s.big_lambda } else { None };
        let r = growth_bounds(&s, gamma, &cfg).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Pass, format!("{name}: {}", r.verdict))?;
        let m = r.details["f_margin_min"].min(r.details["gradient_margin_min"]);
        ensure(m >= -MARGIN_ROUNDING, format!("{name}: margin {m:e}"))?;
        margins.push(m);
        if name == "gaussian" {
            let sat = r.details["ray_f_margin_max"];
            ensure(sat < SATURATION_TOL, format!("gaussian ray margin {sat:e}"))?;
        }
    }
    let shown: Vec<String> = margins.iter().map(|m| format!("{m:.2e}")).collect();
    Ok(format!(
        "min margins [{}], gaussian saturates on rays",
        shown.join(", ")
    ))
}

fn coarea_criterion() -> Outcome {
    let cfg = CheckConfig::default();
    let cyl = example("cylinder_shrinker");
    let p = build_profile(&cyl, 64, 12.0, Normalization::ShiftToZero, &cfg)
        .map_err(|e| e.to_string())?
        .map_err(|e| e.0)?;
    let r = coarea_identity_check(&p, Some(COAREA_TOL));
    ensure(
        r.verdict == Verdict::Pass && r.residual_max < COAREA_TOL,
        format!("residual {:e}", r.residual_max),
    )?;
    let raw = build("cylinder_shrinker", &Params::new().set("a", 0)).unwrap().soliton;
    let q = build_profile(&raw, 64, 12.0, Normalization::AsGiven, &cfg)
        .map_err(|e| e.to_string())?
        .map_err(|e| e.0)?;
    let control = coarea_identity_check(&q, Some(COAREA_TOL));
    let target = 64.0 * PI * PI;
    ensure(control.verdict == Verdict::Fail, "a = 0 control passed")?;
    ensure(
        (control.residual_max / target - 1.0).abs() < CONTROL_REL,
        format!("control residual {} vs 64π² = {target}", control.residual_max),
    )?;
    Ok(format!(
        "residual {:.2e} on 64 radii, a = 0 control {:.4} vs 64π² = {target:.4}",
        r.residual_max, control.residual_max
    ))
}

fn volume_criterion() -> Outcome {
    let cyl = example("cylinder_shrinker");
    let p = build_profile(&cyl, 64, 12.0, Normalization::ShiftToZero, &CheckConfig::default())
        .map_err(|e| e.to_string())?
        .map_err(|e| e.0)?;
    let up = upper_volume_check(&p);
    ensure(up.verdict == Verdict::Pass, format!("upper {}", up.verdict))?;
    let low = lower_volume_check(&p, Some(1.0));
    ensure(low.verdict == Verdict::Pass, format!("lower {}", low.verdict))?;
    ensure(
        low.details["exponent"] == 2.0,
        format!("exponent {}", low.details["exponent"]),
    )?;
    let c2 = low.details["C2"];
    ensure(c2 > 0.0, format!("C2 = {c2}"))?;
    let remark = coarea_identity_check(&p, None).details["remark_margin_min"];
    ensure(remark >= 0.0, format!("remark margin {remark}"))?;
    Ok(format!(
        "V/r⁴ nonincreasing (C1 = {:.4}), δ = 1 exponent 2 C2 = {c2:.4}, remark margin {remark:.3}",
        up.details["C1"]
    ))
}

fn omori_yau_criterion() -> Outcome {
    let cfg = CheckConfig::default().with_samples(128);
    let mut c1s = Vec::new();
    for name in ["gaussian", "cylinder_shrinker"] {
        let s = example(name);
        let lower = lower_bound_probe(&s, &cfg).map_err(|e| e.to_string())?;
        let r = omori_yau_conditions(&s, &lower, &cfg).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Pass, format!("{name}: {}", r.verdict))?;
        for key in ["growth_margin_min", "gradient_margin_min", "laplacian_margin_min"] {
            ensure(r.details[key] >= 0.0, format!("{name}: {key} = {}", r.details[key]))?;
        }
        c1s.push(r.details["c1"]);
    }
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
    let control = omori_yau_margins("exp", &samples, 0.0, SOLITON_TOL, JetRegime::Exact);
    ensure(
        control.verdict == Verdict::Fail && control.details["gradient_margin_min"] < 0.0,
        "exp(r) control did not fail the gradient condition",
    )?;
    Ok(format!(
        "margins nonnegative with c1 = {c1s:.3?}, exp(r) control fails the gradient condition"
    ))
}

fn evolution_criterion() -> Outcome {
    let r = evolution_identities(&example("cylinder_shrinker"), &CheckConfig::default()).map_err(|e| e.to_string())?;
    let gap = r.details["drift_form_gap_max"].max(r.details["variation_form_gap_max"]);
    ensure(gap < EVOLUTION_TOL, format!("gap {gap:e}"))?;
    let (plus, minus) = (
        r.details["r_evolution_plus_residual"],
        r.details["r_evolution_minus_residual"],
    );
    ensure(
        (plus <= EVOLUTION_TOL) != (minus <= EVOLUTION_TOL),
        format!("plus {plus:e}, minus {minus:e}"),
    )?;
    let sign = r.details["r_evolution_sign"];
    ensure(sign == 1.0, format!("sign code {sign}, pinned +1"))?;
    Ok(format!(
        "RHS gap {gap:.1e}, ΔR + 2|Ric|² matches ({plus:.1e}), minus residual {minus:.3}"
    ))
}

fn compact_criterion() -> Outcome {
    let cfg = CheckConfig::default();
    let spheres = [
        build("round_sphere", &Params::new()).unwrap().soliton,
        build("round_sphere", &Params::new().set("dim", 3)).unwrap().soliton,
        build("round_sphere", &Params::new().set("rho", 0.1)).unwrap().soliton,
    ];
    let mut worst: f64 = 0.0;
    for s in &spheres {
        let r = compact_integral(s, &cfg).map_err(|e| e.to_string())?;
        let (a, b) = (r.details["div_integral"].abs(), r.details["hessian_integral"].abs());
        ensure(
            r.verdict == Verdict::Pass && a < QUADRATURE_TOL && b < QUADRATURE_TOL,
            format!("{}: {a:e}, {b:e}", s.label),
        )?;
        worst = worst.max(a).max(b);
    }
    let base = &spheres[0];
    let r2 = Expr::sum_of_squares(0..2);
    let height = (r2.clone() - Expr::num(1.0)) / (r2 + 1.0);
    let bump = SolitonData::new((*base.chart).clone(), height, base.lambda, base.q.clone()).unwrap();
    let control = compact_integral(&bump, &cfg).map_err(|e| e.to_string())?;
    ensure(control.verdict == Verdict::Fail, "height-function control passed")?;
    Ok(format!(
        "max |integral| {worst:.1e} on 3 spheres, control residual {:.3}",
        control.residual_max
    ))
}

fn determinism() -> Outcome {
    let mut sizes = Vec::new();
    for name in ["gaussian", "cylinder_shrinker"] {
        let ex = build(name, &Params::new()).unwrap();
        let mut cfg = RunConfig::new(
            Target::Example {
                name: name.into(),
                params: Params::new(),
            },
            Check::ALL.to_vec(),
        );
        cfg.check_config.samples = 64;
        let a = run_example(&ex, &cfg).map_err(|e| e.to_string())?.report.to_json();
        let b = run_example(&ex, &cfg).map_err(|e| e.to_string())?.report.to_json();
        ensure(a == b, format!("{name}: reports differ"))?;
        sizes.push(a.len());
    }
    Ok(format!("byte-identical reports ({sizes:?} bytes)"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("soliton residuals", soliton_residuals),
        ("hamilton equivalence", hamilton_equivalence),
        ("laplacian of trace", laplacian_of_trace),
        ("rigidity", rigidity_criterion),
        ("ricatti", ricatti_criterion),
        ("growth bounds", growth_criterion),
        ("co-area identity", coarea_criterion),
        ("volume bounds", volume_criterion),
        ("omori-yau suite", omori_yau_criterion),
        ("evolution sign", evolution_criterion),
        ("compact identity", compact_criterion),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
