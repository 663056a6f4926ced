//! Pointwise residual checks for the soliton equation and its identities.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::chart::JetRegime;
use crate::error::Result;
use crate::fields::ScalarField;
use crate::jet::Jet;
use crate::linalg::{bilinear, orthonormal_frame, relative_eigenvalues};
use crate::qspec::QSpec;
use crate::report::CheckReport;
use crate::sampling::{pairwise_sum, sample_points, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::soliton::{SolitonData, SolitonPoint};
use crate::tensor::Tensor;
use crate::tolerances;

/// Sampling and tolerance settings shared by all checks.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    pub samples: usize,
    pub seed: u32,
    /// Overrides the regime default.
    pub tolerance: Option<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            tolerance: None,
        }
    }
}

impl CheckConfig {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u32) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn tolerance_for(&self, regime: JetRegime) -> f64 {
        self.tolerance.unwrap_or(match regime {
            JetRegime::Exact => tolerances::EXACT_RESIDUAL,
            JetRegime::FiniteDifference => tolerances::FINITE_DIFFERENCE_RESIDUAL,
        })
    }

    pub fn points(&self, s: &SolitonData) -> Result<Vec<Vec<f64>>> {
        sample_points(&s.chart, self.samples, self.seed)
    }
}

/// Evaluates `f` at every point in parallel, keeping the input order.
pub fn per_sample<T: Send>(points: &[Vec<f64>], f: impl Fn(&[f64]) -> Result<T> + Sync) -> Result<Vec<T>> {
    points.par_iter().map(|p| f(p)).collect()
}

pub(crate) fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |m: f64, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn values(jets: &[Jet]) -> Vec<f64> {
    jets.iter().map(Jet::value).collect()
}

/// Vector `∇f` and covector `df` values.
pub(crate) fn gradient(pt: &SolitonPoint) -> (Vec<f64>, Vec<f64>) {
    let df: Vec<f64> = (0..pt.geo.dim()).map(|i| pt.f.d1(i)).collect();
    (pt.grad_f(), df)
}

/// `(div Q)_j = ∇_i Q^i_j` through the mixed (1,1) form.
fn mixed_divergence(pt: &SolitonPoint) -> Vec<f64> {
    let geo = &pt.geo;
    let n = geo.dim();
    let gi = geo.ginv();
    let q = &pt.q.q;
    let mixed = Tensor::from_fn(n, 2, |idx| {
        let mut acc = gi.at2(idx[0], 0) * q.at2(0, idx[1]);
        for k in 1..n {
            acc = acc + gi.at2(idx[0], k) * q.at2(k, idx[1]);
        }
        acc
    });
    let gm = geo.gamma().values();
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..n {
                acc += mixed.at2(i, j).d1(i);
                for m in 0..n {
                    acc += gm.at3(i, i, m) * mixed.at2(m, j).value();
                    acc -= gm.at3(m, i, j) * mixed.at2(i, m).value();
                }
            }
            acc
        })
        .collect()
}

/// `g^{ij}(∂_i w_j − Γ^k_ij w_k)` for a covector field given by jets.
fn covector_divergence(pt: &SolitonPoint, w: &[Jet]) -> f64 {
    let geo = &pt.geo;
    let n = geo.dim();
    let gi = geo.ginv().values();
    let gm = geo.gamma().values();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut nab = w[j].d1(i);
            for k in 0..n {
                nab -= gm.at3(k, i, j) * w[k].value();
            }
            acc += gi.at2(i, j) * nab;
        }
    }
    acc
}

fn value_at_anchor(s: &SolitonData, f: impl Fn(&[f64]) -> Result<f64>) -> Result<f64> {
    f(s.chart.anchor())
}

/// Residual `Hess f − λg − ½q` in the g-norm. Also records the traced
/// identity `Δf = λn + ½tr q`.
pub fn soliton_residual(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let points = cfg.points(s)?;
    let n = s.dim() as f64;
    let rows = per_sample(&points, |p| {
        let pt = s.at(p, 2, 0)?;
        let defect = pt.soliton_defect(s.lambda);
        let lap = pt.geo.laplacian(&pt.f).value();
        let traced = (lap - s.lambda * n - 0.5 * pt.q.trace.value()).abs();
        Ok((pt.tensor_norm(&defect), traced))
    })?;
    let traced = max_of(rows.iter().map(|r| r.1));
    let tol = cfg.tolerance_for(s.regime());
    Ok(CheckReport::from_residuals(
        "soliton_residual",
        &s.label,
        rows.iter().map(|r| r.0).collect(),
        tol,
        s.regime(),
    )
    .detail("traced_residual_max", traced)
    .with_points(points))
}

/// `H = |∇f|² − ½tr q − 2λf` as a field, with its constancy report.
pub fn hamilton_scalar(s: &SolitonData, cfg: &CheckConfig) -> Result<(ScalarField, CheckReport)> {
    let data = s.clone();
    let h = ScalarField::function(move |p| Ok(data.at(p, 1, 0)?.hamilton_jet(data.lambda).value()));
    let c = value_at_anchor(s, |p| h.value(p))?;
    let points = cfg.points(s)?;
    let residuals = per_sample(&points, |p| Ok((h.value(p)? - c).abs()))?;
    let tol = cfg.tolerance_for(s.regime());
    let mut report = CheckReport::from_residuals("hamilton_scalar", &s.label, residuals, tol, s.regime())
        .detail("H_anchor", c)
        .with_points(points);
    if report.passed() {
        report.constants.hamilton = Some(c);
    } else {
        report = report.note("H is not constant on the sample set");
    }
    Ok((h, report))
}

/// Residual `Q(∇f) − ½∇tr q` in the g-norm.
pub fn hamilton_tensor(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let points = cfg.points(s)?;
    let rows = per_sample(&points, |p| {
        let pt = s.at(p, 1, 1)?;
        let defect = pt.hamilton_defect();
        Ok((pt.covector_norm(&defect), pt.grad_norm2().sqrt()))
    })?;
    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r.1 > tolerances::CRITICAL_GRADIENT)
        .map(|r| r.0 / r.1)
        .collect();
    let tol = cfg.tolerance_for(s.regime());
    let mut report = CheckReport::from_residuals(
        "hamilton_tensor",
        &s.label,
        rows.iter().map(|r| r.0).collect(),
        tol,
        s.regime(),
    )
    .with_points(points);
    if !ratios.is_empty() {
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        report = report
            .detail("residual_over_grad_min", lo)
            .detail("residual_over_grad_max", hi);
    }
    Ok(report)
}

/// Constancy of `F_Λ = ½|∇f|² − Λf` against the gradient form
/// `Q(∇f) = 2(Λ − λ)∇f`. Uses `Λ` from the data when `big_lambda` is `None`.
pub fn f_lambda(s: &SolitonData, big_lambda: Option<f64>, cfg: &CheckConfig) -> Result<CheckReport> {
    let lam = big_lambda.or(s.big_lambda).unwrap_or(s.lambda);
    let points = cfg.points(s)?;
    let f_lambda_at = |p: &[f64]| -> Result<(f64, f64)> {
        let pt = s.at(p, 1, 0)?;
        let f = 0.5 * pt.grad_norm2() - lam * pt.f.value();
        let qg = values(&pt.q_grad_covector());
        let (_, df) = gradient(&pt);
        let w: Vec<f64> = qg
            .iter()
            .zip(&df)
            .map(|(a, b)| a - 2.0 * (lam - s.lambda) * b)
            .collect();
        Ok((f, pt.covector_norm(&w)))
    };
    let f0 = value_at_anchor(s, |p| Ok(f_lambda_at(p)?.0))?;
    let rows = per_sample(&points, |p| {
        let (f, g) = f_lambda_at(p)?;
        Ok(((f - f0).abs(), g))
    })?;
    let tol = cfg.tolerance_for(s.regime());
    let constancy = max_of(rows.iter().map(|r| r.0));
    let gradient_form = max_of(rows.iter().map(|r| r.1));
    let agree = (constancy <= tol) == (gradient_form <= tol);
    let mut report = CheckReport::from_residuals(
        "f_lambda",
        &s.label,
        rows.iter().map(|r| r.0.max(r.1)).collect(),
        tol,
        s.regime(),
    )
    .detail("constancy_max", constancy)
    .detail("gradient_form_max", gradient_form)
    .detail("sub_verdicts_agree", f64::from(u8::from(agree)))
    .detail("F_anchor", f0)
    .with_points(points);
    report.constants.big_lambda = Some(lam);
    if !agree {
        report = report.note("constancy and gradient-form verdicts disagree");
    }
    Ok(report)
}

/// Samples where the Hamilton identity fails, if any; the precondition of
/// several trace results.
fn hamilton_violation(s: &SolitonData, points: &[Vec<f64>], tol: f64) -> Result<Option<f64>> {
    let worst = max_of(per_sample(points, |p| {
        let pt = s.at(p, 1, 1)?;
        Ok(pt.covector_norm(&pt.hamilton_defect()))
    })?);
    Ok((worst > tol).then_some(worst))
}

/// Laplacian of the trace by two routes, with the divergence identity and
/// the trace-free specialization.
pub fn laplacian_trace(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let tol = cfg.tolerance_for(s.regime());
    let points = cfg.points(s)?;
    if let Some(worst) = hamilton_violation(s, &points, tol)? {
        return Ok(CheckReport::inapplicable(
            "laplacian_trace",
            &s.label,
            tol,
            s.regime(),
            format!("Hamilton identity fails (residual {worst:.3e})"),
        ));
    }
    let lambda = s.lambda;
    struct Row {
        with_trace: f64,
        f_laplace: f64,
        ric_div_general: f64,
        ric_div_reduced: f64,
        quarter: f64,
        trace: f64,
        no_trace: f64,
    }
    let rows = per_sample(&points, |p| {
        let pt = s.at(p, 2, 2)?;
        let geo = &pt.geo;
        let (grad, _) = gradient(&pt);
        let tr = pt.q.trace.value();
        let q2 = pt.q.norm2.value();
        let lap_tr = geo.laplacian(&pt.q.trace).value();
        let dtr: Vec<f64> = (0..geo.dim()).map(|i| pt.q.trace.d1(i)).collect();
        let grad_tr_f = dot(&dtr, &grad);
        let div_q = values(&geo.divergence(&pt.q.q));
        let div_q_f = dot(&div_q, &grad);
        let div_mixed_f = dot(&mixed_divergence(&pt), &grad);
        let ric = geo.ricci().values();
        let q = pt.q.q.values();
        let ric_ff = bilinear(&ric, &grad, &grad);
        let q_ff = bilinear(&q, &grad, &grad);

        let with_trace = lap_tr - 2.0 * lambda * tr - q2 - 2.0 * div_q_f;
        let f_lap_tr = lap_tr - grad_tr_f;
        let f_laplace = f_lap_tr - 2.0 * lambda * tr - q2 - (2.0 * div_mixed_f - grad_tr_f);
        Ok(Row {
            with_trace: with_trace.abs(),
            f_laplace: f_laplace.abs(),
            ric_div_general: (div_q_f - 2.0 * ric_ff - grad_tr_f).abs(),
            ric_div_reduced: (div_q_f - 2.0 * ric_ff - 2.0 * q_ff).abs(),
            quarter: (0.25 * lap_tr - 0.5 * lambda * tr - 0.25 * q2 - ric_ff - q_ff).abs(),
            trace: tr,
            no_trace: (div_q_f + 0.5 * q2).abs(),
        })
    })?;
    let trace_free = rows.iter().all(|r| r.trace.abs() <= tol);
    let residuals: Vec<f64> = rows
        .iter()
        .map(|r| {
            let mut m = r.with_trace.max(r.f_laplace).max(r.ric_div_reduced);
            if trace_free {
                m = m.max(r.no_trace);
            }
            m
        })
        .collect();
    let mut report = CheckReport::from_residuals("laplacian_trace", &s.label, residuals, tol, s.regime())
        .detail("with_trace_max", max_of(rows.iter().map(|r| r.with_trace)))
        .detail("f_laplacian_max", max_of(rows.iter().map(|r| r.f_laplace)))
        .detail(
            "route_gap_max",
            max_of(rows.iter().map(|r| (r.with_trace - r.f_laplace).abs())),
        )
        .detail("ric_div_general_max", max_of(rows.iter().map(|r| r.ric_div_general)))
        .detail("ric_div_reduced_max", max_of(rows.iter().map(|r| r.ric_div_reduced)))
        .detail("quarter_form_max", max_of(rows.iter().map(|r| r.quarter)))
        .with_points(points);
    if trace_free {
        report = report.detail("no_trace_max", max_of(rows.iter().map(|r| r.no_trace)));
    }
    Ok(report)
}

/// Constant trace, radial flatness and `Q(∇f) = c∇f` with a fitted `c`.
pub fn rigidity(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let tol = cfg.tolerance_for(s.regime());
    let points = cfg.points(s)?;
    let tr0 = value_at_anchor(s, |p| Ok(s.at(p, 1, 0)?.q.trace.value()))?;
    struct Row {
        trace_dev: f64,
        radial: f64,
        grad: Vec<f64>,
        qgrad: Vec<f64>,
        ginv: Tensor<f64>,
        critical: bool,
    }
    let rows = per_sample(&points, |p| {
        let pt = s.at(p, 1, 0)?;
        let g = pt.geo.g().values().to_matrix();
        let (grad, _) = gradient(&pt);
        let critical = pt.grad_norm2().sqrt() <= tolerances::CRITICAL_GRADIENT;
        let mut radial = 0.0f64;
        if !critical {
            let frame = orthonormal_frame(&g).ok_or_else(|| crate::Error::NotPositiveDefinite { point: p.to_vec() })?;
            for col in frame.column_iter() {
                let x: Vec<f64> = col.iter().copied().collect();
                let r = pt.geo.curvature_operator(&x, &grad, &grad);
                radial = radial.max(crate::linalg::metric_norm(&g, &r));
            }
        }
        Ok(Row {
            trace_dev: (pt.q.trace.value() - tr0).abs(),
            radial,
            grad,
            qgrad: values(&pt.q_grad_covector()),
            ginv: pt.geo.ginv().values(),
            critical,
        })
    })?;
    let critical = rows.iter().filter(|r| r.critical).count();
    let cov_norm2 = |ginv: &Tensor<f64>, w: &[f64]| bilinear(ginv, w, w);
    // Least squares: c = Σ⟨Q∇f, ∇f⟩ / Σ|∇f|² over non-critical samples.
    let (num, den) = rows.iter().filter(|r| !r.critical).fold((0.0, 0.0), |(a, b), r| {
        (a + dot(&r.qgrad, &r.grad), b + dot(&r.grad, &lower(&r.ginv, &r.grad)))
    });
    let c = (den > 0.0).then(|| num / den);
    let fit: Vec<f64> = rows
        .iter()
        .map(|r| match c {
            Some(c) if !r.critical => {
                let df = lower(&r.ginv, &r.grad);
                let w: Vec<f64> = r.qgrad.iter().zip(&df).map(|(a, b)| a - c * b).collect();
                cov_norm2(&r.ginv, &w).max(0.0).sqrt()
            }
            _ => 0.0,
        })
        .collect();
    let residuals: Vec<f64> = rows
        .iter()
        .zip(&fit)
        .map(|(r, f)| r.trace_dev.max(r.radial).max(*f))
        .collect();
    let mut report = CheckReport::from_residuals("rigidity", &s.label, residuals, tol, s.regime())
        .detail("trace_deviation_max", max_of(rows.iter().map(|r| r.trace_dev)))
        .detail("radial_curvature_max", max_of(rows.iter().map(|r| r.radial)))
        .detail("gradient_fit_max", max_of(fit.iter().copied()))
        .detail("critical_samples", critical as f64)
        .detail("trace", tr0)
        .with_points(points);
    report.constants.c = c;
    if c.is_none() {
        report = report.note("every sample is critical; radial and gradient conditions are vacuous");
    }
    Ok(report)
}

/// `g_ij v^j` given `g⁻¹`.
fn lower(ginv: &Tensor<f64>, v: &[f64]) -> Vec<f64> {
    let g = ginv.to_matrix().try_inverse().expect("invertible metric");
    (0..v.len())
        .map(|i| (0..v.len()).map(|j| g[(i, j)] * v[j]).sum())
        .collect()
}

/// Sign sandwich for a constant trace and the classification at its extremes.
pub fn trace_bounds(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let tol = cfg.tolerance_for(s.regime());
    let name = "trace_bounds";
    if s.lambda == 0.0 {
        return Ok(CheckReport::inapplicable(
            name,
            &s.label,
            tol,
            s.regime(),
            "steady soliton (λ = 0)",
        ));
    }
    let points = cfg.points(s)?;
    if let Some(worst) = hamilton_violation(s, &points, tol)? {
        return Ok(CheckReport::inapplicable(
            name,
            &s.label,
            tol,
            s.regime(),
            format!("Hamilton identity fails (residual {worst:.3e})"),
        ));
    }
    let n = s.dim() as f64;
    let lambda = s.lambda;
    let tr0 = value_at_anchor(s, |p| Ok(s.at(p, 1, 0)?.q.trace.value()))?;
    let rows = per_sample(&points, |p| {
        let pt = s.at(p, 1, 1)?;
        let (grad, _) = gradient(&pt);
        let div_q_f = dot(&values(&pt.geo.divergence(&pt.q.q)), &grad);
        let q = pt.q.q.values();
        let g = pt.geo.g().values();
        let einstein = Tensor::from_fn(pt.geo.dim(), 2, |idx| {
            q.at2(idx[0], idx[1]) + 2.0 * lambda * g.at2(idx[0], idx[1])
        });
        Ok((
            pt.q.trace.value(),
            div_q_f,
            pt.q.norm2.value().max(0.0).sqrt(),
            pt.tensor_norm(&einstein),
        ))
    })?;
    let trace_dev = max_of(rows.iter().map(|r| (r.0 - tr0).abs()));
    if trace_dev > tol {
        return Ok(CheckReport::inapplicable(
            name,
            &s.label,
            tol,
            s.regime(),
            format!("trace is not constant (deviation {trace_dev:.3e})"),
        ));
    }
    let min_div = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    if min_div < -tol {
        return Ok(CheckReport::inapplicable(
            name,
            &s.label,
            tol,
            s.regime(),
            format!("div(q)(∇f) is negative ({min_div:.3e})"),
        ));
    }
    let (lo, hi) = if lambda > 0.0 {
        (-2.0 * lambda * n, 0.0)
    } else {
        (0.0, -2.0 * lambda * n)
    };
    let at_zero = tr0.abs() <= tol;
    let at_einstein = (tr0 + 2.0 * lambda * n).abs() <= tol;
    let residuals: Vec<f64> = rows
        .iter()
        .map(|r| {
            let mut m = (lo - r.0).max(r.0 - hi).max(0.0);
            if at_zero {
                m = m.max(r.2);
            }
            if at_einstein {
                m = m.max(r.3);
            }
            m
        })
        .collect();
    let extreme = if at_zero {
        1.0
    } else if at_einstein {
        2.0
    } else {
        0.0
    };
    let mut report = CheckReport::from_residuals(name, &s.label, residuals, tol, s.regime())
        .detail("trace", tr0)
        .detail("lower", lo)
        .detail("upper", hi)
        .detail("extreme", extreme)
        .with_points(points);
    if at_zero {
        report = report.note("extreme tr q = 0: q-flat case tested");
    } else if at_einstein {
        report = report.note("extreme tr q = -2λn: q = -2λg tested");
    }
    Ok(report)
}

/// Which flatness hypotheses hold on the samples and whether `q` vanishes
/// wherever one does.
pub fn flatness_hypotheses(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let tol = cfg.tolerance_for(s.regime());
    let name = "flatness_hypotheses";
    let points = cfg.points(s)?;
    if let Some(worst) = hamilton_violation(s, &points, tol)? {
        return Ok(CheckReport::inapplicable(
            name,
            &s.label,
            tol,
            s.regime(),
            format!("Hamilton identity fails (residual {worst:.3e})"),
        ));
    }
    let tr0 = value_at_anchor(s, |p| Ok(s.at(p, 1, 0)?.q.trace.value()))?;
    let rows = per_sample(&points, |p| {
        let pt = s.at(p, 1, 1)?;
        let g = pt.geo.g().values().to_matrix();
        let ric_min = relative_eigenvalues(&g, &pt.geo.ricci().values())
            .ok_or_else(|| crate::Error::NotPositiveDefinite { point: p.to_vec() })?[0];
        let div_q = values(&pt.geo.divergence(&pt.q.q));
        Ok((
            pt.q.trace.value(),
            pt.covector_norm(&div_q),
            ric_min,
            pt.q.norm2.value().max(0.0).sqrt(),
        ))
    })?;
    let trace_free = rows.iter().all(|r| r.0.abs() <= tol);
    let div_free = rows.iter().all(|r| r.1 <= tol);
    let ric_nonneg = rows.iter().all(|r| r.2 >= -tol);
    let trace_const = rows.iter().all(|r| (r.0 - tr0).abs() <= tol);
    let trace_nonpos = rows.iter().all(|r| r.0 <= tol);
    let hyp = [
        trace_free && div_free,
        trace_free && ric_nonneg,
        s.lambda == 0.0 && trace_const && ric_nonneg,
        s.lambda < 0.0 && div_free && trace_nonpos && ric_nonneg,
    ];
    let flag = |b: bool| f64::from(u8::from(b));
    let mut report = CheckReport::from_residuals(name, &s.label, rows.iter().map(|r| r.3).collect(), tol, s.regime())
        .detail("hypothesis_i", flag(hyp[0]))
        .detail("hypothesis_ii", flag(hyp[1]))
        .detail("hypothesis_iii", flag(hyp[2]))
        .detail("hypothesis_iv", flag(hyp[3]))
        .detail("ricci_min", rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min))
        .note("parabolicity: not decidable; hypothesis iv is tested only through its Ric >= 0 branch")
        .with_points(points);
    if !hyp.iter().any(|&h| h) {
        report = report.mark_inapplicable("no flatness hypothesis holds on the samples");
    } else if !report.passed() {
        report = report.note("a hypothesis holds but q does not vanish: sampled counterexample");
    }
    Ok(report)
}

const GAUSS4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Composite 4-point Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(4 * panels);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// Quadrature nodes `(u, weight)` covering all of `ℝⁿ` through
/// `u = tan(φ/2)ω`, so that compact stereographic charts are integrated
/// against a bounded density.
pub fn compact_nodes(n: usize) -> Vec<(Vec<f64>, f64)> {
    let panels = match n {
        0..=2 => 24,
        3 => 8,
        _ => 4,
    };
    let polar = gauss_legendre(0.0, PI, panels);
    let az_count = if n <= 2 { 8 * panels } else { 4 * panels };
    let azimuth: Vec<(f64, f64)> = (0..az_count)
        .map(|k| (2.0 * PI * k as f64 / az_count as f64, 2.0 * PI / az_count as f64))
        .collect();
    // Angular part: (ω, weight) over the unit sphere S^{n-1}.
    let mut sphere: Vec<(Vec<f64>, f64)> = if n == 1 {
        vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]
    } else {
        vec![(Vec::new(), 1.0)]
    };
    if n >= 2 {
        // Angles θ_1..θ_{n-2} in [0, π], then θ_{n-1} in [0, 2π).
        let mut angles: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
        for k in 1..n - 1 {
            let power = (n - 1 - k) as i32;
            angles = angles
                .into_iter()
                .flat_map(|(a, w)| {
                    polar.iter().map(move |&(t, wt)| {
                        let mut a2 = a.clone();
                        a2.push(t);
                        (a2, w * wt * t.sin().powi(power))
                    })
                })
                .collect();
        }
        sphere = angles
            .into_iter()
            .flat_map(|(a, w)| {
                azimuth.iter().map(move |&(t, wt)| {
                    let mut a2 = a.clone();
                    a2.push(t);
                    (hyperspherical(&a2), w * wt)
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(polar.len() * sphere.len());
    for &(phi, wphi) in &polar {
        let t = (0.5 * phi).tan();
        let sec2 = 1.0 + t * t;
        let jac = t.powi(n as i32 - 1) * 0.5 * sec2;
        for (omega, w) in &sphere {
            out.push((omega.iter().map(|o| t * o).collect(), wphi * jac * w));
        }
    }
    out
}

fn hyperspherical(angles: &[f64]) -> Vec<f64> {
    let n = angles.len() + 1;
    let mut out = Vec::with_capacity(n);
    let mut prod = 1.0;
    for (k, &a) in angles.iter().enumerate() {
        if k + 1 == angles.len() {
            out.push(prod * a.cos());
            out.push(prod * a.sin());
        } else {
            out.push(prod * a.cos());
            prod *= a.sin();
        }
    }
    out
}

/// `½∫div(q)(∇f) + ∫|Hess f|² = 0` on a compact chart covering the
/// manifold up to a point.
pub fn compact_integral(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let name = "compact_integral";
    let tol = cfg.tolerance.unwrap_or(tolerances::QUADRATURE);
    if !s.chart.is_compact() || !s.chart.domain().is_all() || s.dim() < 2 {
        return Ok(CheckReport::inapplicable(
            name,
            &s.label,
            tol,
            s.regime(),
            "chart does not cover a compact manifold up to a point",
        ));
    }
    let nodes = compact_nodes(s.dim());
    let rows = per_sample(&nodes.iter().map(|(u, _)| u.clone()).collect::<Vec<_>>(), |p| {
        let pt = s.at(p, 2, 1)?;
        let (grad, _) = gradient(&pt);
        let div_q_f = dot(&values(&pt.geo.divergence(&pt.q.q)), &grad);
        let hess = pt.geo.hessian(&pt.f).values();
        let vol = pt.geo.g().values().to_matrix().determinant().sqrt();
        Ok((div_q_f * vol, pt.tensor_norm(&hess).powi(2) * vol))
    })?;
    let weighted = |k: usize| {
        let terms: Vec<f64> = rows
            .iter()
            .zip(&nodes)
            .map(|(r, (_, w))| w * if k == 0 { r.0 } else { r.1 })
            .collect();
        pairwise_sum(&terms)
    };
    let div_int = weighted(0);
    let hess_int = weighted(1);
    let residual = (0.5 * div_int + hess_int).abs();
    let mut report = CheckReport::from_residuals(name, &s.label, vec![residual], tol, s.regime())
        .detail("div_integral", div_int)
        .detail("hessian_integral", hess_int)
        .detail("nodes", nodes.len() as f64);
    report.samples = nodes.len();
    if hess_int > tol {
        report = report.detail("div_integral_negative", f64::from(u8::from(div_int < 0.0)));
    }
    if !report.passed() {
        report = report.note("integral identity fails: data is not a compact soliton");
    }
    Ok(report)
}

/// Which reduction of the scalar-curvature evolution matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvolutionSign {
    Plus,
    Minus,
    Neither,
    Both,
}

impl EvolutionSign {
    pub fn code(self) -> f64 {
        match self {
            EvolutionSign::Plus => 1.0,
            EvolutionSign::Minus => -1.0,
            EvolutionSign::Neither => 0.0,
            EvolutionSign::Both => 2.0,
        }
    }
}

/// Decides the sign from the residuals of `ΔR + 2|Ric|²` and `ΔR − 2|Ric|²`.
pub fn evolution_sign(plus: f64, minus: f64, tol: f64) -> EvolutionSign {
    match (plus <= tol, minus <= tol) {
        (true, false) => EvolutionSign::Plus,
        (false, true) => EvolutionSign::Minus,
        (true, true) => EvolutionSign::Both,
        (false, false) => EvolutionSign::Neither,
    }
}

/// Pointwise right-hand sides of the trace evolution, plus the scalar
/// curvature evolution of the q-flow.
pub fn evolution_identities(s: &SolitonData, cfg: &CheckConfig) -> Result<CheckReport> {
    let tol = cfg.tolerance_for(s.regime());
    let points = cfg.points(s)?;
    let lambda = s.lambda;
    let is_ricci = matches!(s.q, QSpec::Ricci);
    struct Row {
        rhs_trace: f64,
        rhs_drift: f64,
        rhs_variation: f64,
        r_evolution: f64,
        plus: f64,
        minus: f64,
        soliton_r: f64,
    }
    let rows = per_sample(&points, |p| {
        let pt = s.at(p, 2, 2)?;
        let geo = &pt.geo;
        let n = geo.dim();
        let (grad, _) = gradient(&pt);
        let tr = pt.q.trace.value();
        let q2 = pt.q.norm2.value();
        let dtr: Vec<f64> = (0..n).map(|i| pt.q.trace.d1(i)).collect();
        let div_jets = geo.divergence(&pt.q.q);
        let div_q = values(&div_jets);
        let lap_tr = geo.laplacian(&pt.q.trace).value();

        let bracket: Vec<f64> = div_q.iter().zip(&dtr).map(|(d, t)| 2.0 * d - t).collect();
        let rhs_trace = -q2 - 2.0 * lambda * tr - dot(&bracket, &grad);
        let rhs_drift = -(lap_tr - dot(&dtr, &grad));

        // Variation of g^{ij}∇_i∇_j f under ∂g = q.
        let gi = geo.ginv().values();
        let q = pt.q.q.values();
        let hess = geo.hessian(&pt.f).values();
        let dq = geo.covariant_derivative(&pt.q.q).values();
        let mut q_hess = 0.0;
        let mut christoffel_var = 0.0;
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        q_hess += gi.at2(i, a) * gi.at2(j, b) * q.at2(a, b) * hess.at2(i, j);
                    }
                }
                for k in 0..n {
                    for l in 0..n {
                        let t = dq.at3(i, j, l) + dq.at3(j, i, l) - dq.at3(l, i, j);
                        christoffel_var += gi.at2(i, j) * gi.at2(k, l) * t * grad[k];
                    }
                }
            }
        }
        let rhs_variation = 2.0 * (-q_hess - 0.5 * christoffel_var);

        let div_div = covector_divergence(&pt, &div_jets);
        let ric = geo.ricci().truncate(0);
        let q_ric = geo.inner2(&pt.q.q.truncate(0), &ric).value();
        let r_evolution = -lap_tr + div_div - q_ric;
        let (plus, minus, soliton_r) = if is_ricci {
            let lap_r = geo.laplacian(geo.scalar()).value();
            let ric2 = geo.inner2(&ric, &ric).value();
            let r = geo.scalar().value();
            (
                (r_evolution - (lap_r + 2.0 * ric2)).abs(),
                (r_evolution - (lap_r - 2.0 * ric2)).abs(),
                (-0.5 * rhs_trace - (-2.0 * lambda * r + 2.0 * ric2)).abs(),
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        Ok(Row {
            rhs_trace,
            rhs_drift,
            rhs_variation,
            r_evolution,
            plus,
            minus,
            soliton_r,
        })
    })?;
    let drift_gap = max_of(rows.iter().map(|r| (r.rhs_trace - r.rhs_drift).abs()));
    let variation_gap = max_of(rows.iter().map(|r| (r.rhs_trace - r.rhs_variation).abs()));
    let residuals: Vec<f64> = rows
        .iter()
        .map(|r| {
            (r.rhs_trace - r.rhs_drift)
                .abs()
                .max((r.rhs_trace - r.rhs_variation).abs())
        })
        .collect();
    let mut report = CheckReport::from_residuals("evolution_identities", &s.label, residuals, tol, s.regime())
        .detail("drift_form_gap_max", drift_gap)
        .detail("variation_form_gap_max", variation_gap)
        .detail("trace_rhs_abs_max", max_of(rows.iter().map(|r| r.rhs_trace.abs())))
        .detail("r_evolution_abs_max", max_of(rows.iter().map(|r| r.r_evolution.abs())))
        .with_points(points);
    if variation_gap > tol {
        report = report.note("the substituted form disagrees with the direct variation");
    }
    if drift_gap > tol && variation_gap <= tol {
        report = report.note("the drift-Laplacian form needs the Hamilton identity, which fails here");
    }
    if is_ricci {
        let plus = max_of(rows.iter().map(|r| r.plus));
        let minus = max_of(rows.iter().map(|r| r.minus));
        let sign = evolution_sign(plus, minus, tol);
        report = report
            .detail("r_evolution_plus_residual", plus)
            .detail("r_evolution_minus_residual", minus)
            .detail("r_evolution_sign", sign.code())
            .detail("soliton_r_evolution_max", max_of(rows.iter().map(|r| r.soliton_r)))
            .note(match sign {
                EvolutionSign::Plus => "scalar curvature evolution matches ΔR + 2|Ric|²",
                EvolutionSign::Minus => "scalar curvature evolution matches ΔR - 2|Ric|²",
                EvolutionSign::Both => "both reductions match (|Ric| vanishes on the samples)",
                EvolutionSign::Neither => "neither reduction matches",
            });
    }
    Ok(report)
}
