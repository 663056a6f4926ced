//! Sublevel sets of `η = √(2f/λ)`, their volumes, and the volume growth checks.

use std::io::Write;

use crate::chart::{sphere_area, FactorKind, JetRegime};
use crate::error::Result;
use crate::report::CheckReport;
use crate::sampling::unit_point;
use crate::soliton::SolitonData;
use crate::tolerances;
use crate::verify::{hamilton_scalar, max_of, per_sample, CheckConfig};

/// How `f` is shifted before building sublevel sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Shift so that `|∇f|² − ½tr q − 2λf = 0`.
    ShiftToZero,
    /// Use the potential as given.
    AsGiven,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProfileMethod {
    /// Compact factor volume times flat-factor balls.
    ProductClosedForm,
    /// Quasi-Monte Carlo over the sample box with a shell estimate for
    /// boundary integrals.
    MonteCarlo { points: usize, seed: u32 },
    /// Volumes supplied directly.
    Synthetic,
}

/// Volumes and integrals of the sets `Ω(r) = {η < r}` on a radius grid.
#[derive(Clone, Debug)]
pub struct SublevelProfile {
    pub label: String,
    pub dim: usize,
    pub lambda: f64,
    pub normalization: Normalization,
    /// Constant added to the potential.
    pub shift: f64,
    pub method: ProfileMethod,
    pub radii: Vec<f64>,
    pub volume: Vec<f64>,
    /// Finite differences of `volume`.
    pub volume_derivative: Vec<f64>,
    /// `∫_{Ω(r)} tr q`.
    pub trace_integral: Vec<f64>,
    /// `∫_{∂Ω(r)} tr q / |∇f|`.
    pub boundary_trace: Vec<f64>,
    /// `∫_{∂Ω(r)} 1 / |∇f|`.
    pub boundary_inverse_gradient: Vec<f64>,
    /// Standard error of `volume`; zero for closed forms.
    pub volume_error: Vec<f64>,
    /// Error bar on the co-area identity terms; zero for closed forms.
    pub identity_error: Vec<f64>,
    /// Normalized potential at the anchor.
    pub anchor_potential: f64,
    pub eta_min: f64,
    /// Largest sampled `|∇η|` where `f > 0`.
    pub grad_eta_max: f64,
    pub regime: JetRegime,
}

/// Uniform grid of `count` radii from just above `eta_min` to `r_max`.
pub fn radius_grid(eta_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    let step = (r_max - eta_min) / count as f64;
    (1..=count).map(|k| eta_min + step * k as f64).collect()
}

/// Second-order finite differences, one-sided at the ends.
pub fn fd_derivative(r: &[f64], v: &[f64]) -> Vec<f64> {
    let m = v.len();
    if m < 3 {
        return vec![0.0; m];
    }
    let h = (r[m - 1] - r[0]) / (m - 1) as f64;
    (0..m)
        .map(|k| match k {
            0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
            k if k == m - 1 => (3.0 * v[k] - 4.0 * v[k - 1] + v[k - 2]) / (2.0 * h),
            k => (v[k + 1] - v[k - 1]) / (2.0 * h),
        })
        .collect()
}

/// `|D_h − D_2h|` at interior points, a truncation estimate for `D_h`.
fn fd_error(r: &[f64], v: &[f64]) -> Vec<f64> {
    let m = v.len();
    if m < 5 {
        return vec![0.0; m];
    }
    let h = (r[m - 1] - r[0]) / (m - 1) as f64;
    (0..m)
        .map(|k| {
            if k < 2 || k + 2 >= m {
                return 0.0;
            }
            let d1 = (v[k + 1] - v[k - 1]) / (2.0 * h);
            let d2 = (v[k + 2] - v[k - 2]) / (4.0 * h);
            (d1 - d2).abs()
        })
        .collect()
}

impl SublevelProfile {
    /// A profile carrying only volumes, for exercising the growth checks.
    pub fn synthetic(label: &str, dim: usize, lambda: f64, radii: Vec<f64>, volume: Vec<f64>) -> SublevelProfile {
        let m = radii.len();
        SublevelProfile {
            label: label.to_string(),
            dim,
            lambda,
            normalization: Normalization::AsGiven,
            shift: 0.0,
            method: ProfileMethod::Synthetic,
            volume_derivative: fd_derivative(&radii, &volume),
            radii,
            volume,
            trace_integral: vec![0.0; m],
            boundary_trace: vec![0.0; m],
            boundary_inverse_gradient: vec![0.0; m],
            volume_error: vec![0.0; m],
            identity_error: vec![0.0; m],
            anchor_potential: 0.0,
            eta_min: 0.0,
            grad_eta_max: 0.0,
            regime: JetRegime::Exact,
        }
    }

    /// `G(r) = ∫_{Ω(r)} (−λ tr q)`.
    pub fn g_integral(&self) -> Vec<f64> {
        self.trace_integral.iter().map(|t| -self.lambda * t).collect()
    }

    /// `nV − rV' − [−(1/2λ)∫_Ω tr q + (1/2λ)∫_{∂Ω} tr q/|∇f|]` per radius.
    pub fn identity_defect(&self) -> Vec<f64> {
        let n = self.dim as f64;
        let c = 1.0 / (2.0 * self.lambda);
        (0..self.radii.len())
            .map(|k| {
                let lhs = n * self.volume[k] - self.radii[k] * self.volume_derivative[k];
                let rhs = -c * self.trace_integral[k] + c * self.boundary_trace[k];
                lhs - rhs
            })
            .collect()
    }

    /// CSV with columns `r, V, V', G, identity_residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "V", "dV", "G", "identity_residual"])?;
        let g = self.g_integral();
        let defect = self.identity_defect();
        for k in 0..self.radii.len() {
            w.write_record([
                self.radii[k].to_string(),
                self.volume[k].to_string(),
                self.volume_derivative[k].to_string(),
                g[k].to_string(),
                defect[k].abs().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Why a profile could not be built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inapplicable(pub String);

/// `f = (λ/2)|x − center|² + minimum` on a single flat factor, all other
/// factors compact, and `tr q` constant.
struct ProductForm {
    flat_dim: usize,
    compact_volume: f64,
    minimum: f64,
    trace: f64,
}

fn product_form(s: &SolitonData, cfg: &CheckConfig) -> Result<Option<ProductForm>> {
    let Some(st) = s.chart.structure() else {
        return Ok(None);
    };
    let flats: Vec<_> = st.factors.iter().filter(|f| f.kind == FactorKind::Flat).collect();
    if flats.len() != 1
        || st
            .factors
            .iter()
            .any(|f| f.kind != FactorKind::Flat && f.volume().is_none())
    {
        return Ok(None);
    }
    let flat = flats[0];
    let x0 = s.chart.anchor();
    let jet = s.potential_jet(x0, 1)?;
    let lambda = s.lambda;
    let range = flat.start..flat.start + flat.dim;
    if (0..s.dim()).any(|i| !range.contains(&i) && jet.d1(i).abs() > 1e-12) {
        return Ok(None);
    }
    let center: Vec<f64> = range.clone().map(|i| x0[i] - jet.d1(i) / lambda).collect();
    let grad2: f64 = range.clone().map(|i| jet.d1(i).powi(2)).sum();
    let minimum = jet.value() - grad2 / (2.0 * lambda);
    let trace = s.at(x0, 1, 0)?.q.trace.value();
    let points = cfg.points(s)?;
    let checks = per_sample(&points[..points.len().min(32)], |p| {
        let model: f64 =
            0.5 * lambda * range.clone().zip(&center).map(|(i, c)| (p[i] - c).powi(2)).sum::<f64>() + minimum;
        let f = s.potential(p)?;
        let tr = s.at(p, 1, 0)?.q.trace.value();
        Ok((f - model).abs() <= 1e-9 * (1.0 + f.abs()) && (tr - trace).abs() <= 1e-9 * (1.0 + trace.abs()))
    })?;
    if !checks.into_iter().all(|ok| ok) {
        return Ok(None);
    }
    Ok(Some(ProductForm {
        flat_dim: flat.dim,
        compact_volume: st.compact_volume(),
        minimum,
        trace,
    }))
}

/// Shift for the requested normalization, or the reason it is unavailable.
fn normalization_shift(
    s: &SolitonData,
    normalization: Normalization,
    cfg: &CheckConfig,
) -> Result<std::result::Result<f64, Inapplicable>> {
    match normalization {
        Normalization::AsGiven => Ok(Ok(0.0)),
        Normalization::ShiftToZero => {
            let (_, report) = hamilton_scalar(s, cfg)?;
            Ok(match report.constants.hamilton {
                Some(c) if report.passed() => Ok(c / (2.0 * s.lambda)),
                _ => Err(Inapplicable(
                    "the Hamilton identity fails, so f cannot be normalized".into(),
                )),
            })
        }
    }
}

struct PointData {
    f: f64,
    grad: f64,
    trace: f64,
    sqrt_det: f64,
}

/// Builds `Ω(r)` data on `count` radii up to `r_max`.
pub fn build_profile(
    s: &SolitonData,
    count: usize,
    r_max: f64,
    normalization: Normalization,
    cfg: &CheckConfig,
) -> Result<std::result::Result<SublevelProfile, Inapplicable>> {
    let lambda = s.lambda;
    if lambda <= 0.0 {
        return Ok(Err(Inapplicable("requires λ > 0".into())));
    }
    if s.chart.is_compact() {
        return Ok(Err(Inapplicable("sublevel growth needs a noncompact manifold".into())));
    }
    if count < 5 {
        return Ok(Err(Inapplicable("the radius grid needs at least five points".into())));
    }
    let samples = cfg.points(s)?;
    let base = per_sample(&samples, |p| point_data(s, p))?;
    if base.iter().all(|d| d.grad <= tolerances::CRITICAL_GRADIENT) {
        return Ok(Err(Inapplicable("f is stationary".into())));
    }
    let shift = match normalization_shift(s, normalization, cfg)? {
        Ok(c) => c,
        Err(e) => return Ok(Err(e)),
    };
    let tol = cfg.tolerance_for(s.regime());
    let f_max = base
        .iter()
        .map(|d| 0.5 * d.grad * d.grad - lambda * (d.f + shift))
        .fold(f64::NEG_INFINITY, f64::max);
    if f_max > tol {
        return Ok(Err(Inapplicable(format!("½|∇f|² − λf reaches {f_max:.3e} > 0"))));
    }
    let grad_eta_max = max_of(
        base.iter()
            .filter(|d| d.f + shift > 0.0)
            .map(|d| d.grad / (2.0 * lambda * (d.f + shift)).sqrt()),
    );
    let anchor_potential = s.potential(s.chart.anchor())? + shift;

    let mut profile = match product_form(s, cfg)? {
        Some(form) => closed_form_profile(s, &form, shift, count, r_max),
        None => monte_carlo_profile(s, shift, count, r_max, cfg)?,
    };
    profile.normalization = normalization;
    profile.anchor_potential = anchor_potential;
    profile.grad_eta_max = grad_eta_max;
    Ok(Ok(profile))
}

fn point_data(s: &SolitonData, p: &[f64]) -> Result<PointData> {
    let pt = s.at(p, 1, 0)?;
    let det = pt.geo.g().values().to_matrix().determinant();
    Ok(PointData {
        f: pt.f.value(),
        grad: pt.grad_norm2().max(0.0).sqrt(),
        trace: pt.q.trace.value(),
        sqrt_det: det.max(0.0).sqrt(),
    })
}

fn empty_profile(s: &SolitonData, shift: f64, method: ProfileMethod, radii: Vec<f64>, eta_min: f64) -> SublevelProfile {
    let mut p = SublevelProfile::synthetic(&s.label, s.dim(), s.lambda, radii, Vec::new());
    p.shift = shift;
    p.method = method;
    p.eta_min = eta_min;
    p.regime = s.regime();
    for v in [
        &mut p.volume_derivative,
        &mut p.trace_integral,
        &mut p.boundary_trace,
        &mut p.boundary_inverse_gradient,
        &mut p.volume_error,
        &mut p.identity_error,
    ] {
        v.clear();
    }
    p
}

fn closed_form_profile(s: &SolitonData, form: &ProductForm, shift: f64, count: usize, r_max: f64) -> SublevelProfile {
    let lambda = s.lambda;
    let k = form.flat_dim as i32;
    let sphere = sphere_area(form.flat_dim - 1);
    let ball = sphere / k as f64;
    let e2 = 2.0 * (form.minimum + shift) / lambda;
    let eta_min = e2.max(0.0).sqrt();
    let radii = radius_grid(eta_min, r_max, count);
    let mut p = empty_profile(s, shift, ProfileMethod::ProductClosedForm, radii.clone(), eta_min);
    let rho = |r: f64| (r * r - e2).max(0.0).sqrt();
    p.volume = radii
        .iter()
        .map(|&r| form.compact_volume * ball * rho(r).powi(k))
        .collect();
    p.volume_derivative = fd_derivative(&radii, &p.volume);
    p.trace_integral = p.volume.iter().map(|v| form.trace * v).collect();
    // On ∂Ω(r) the flat radius is ρ and |∇f| = λρ.
    p.boundary_inverse_gradient = radii
        .iter()
        .map(|&r| form.compact_volume * sphere * rho(r).powi(k - 2) / lambda)
        .collect();
    p.boundary_trace = p.boundary_inverse_gradient.iter().map(|b| form.trace * b).collect();
    p.identity_error = fd_error(&radii, &p.volume)
        .iter()
        .zip(&radii)
        .map(|(e, r)| e * r)
        .collect();
    p.volume_error = vec![0.0; radii.len()];
    p
}

fn monte_carlo_profile(
    s: &SolitonData,
    shift: f64,
    count: usize,
    r_max: f64,
    cfg: &CheckConfig,
) -> Result<SublevelProfile> {
    let lambda = s.lambda;
    let bounds = s.chart.sample_box().to_vec();
    let box_volume: f64 = bounds.iter().map(|(a, b)| b - a).product();
    let total = (cfg.samples * 16).max(4096);
    let seed = cfg.seed.wrapping_add(1);
    let candidates: Vec<Vec<f64>> = (0..total as u32)
        .map(|i| {
            unit_point(i, bounds.len(), seed)
                .iter()
                .zip(&bounds)
                .map(|(t, (a, b))| a + t * (b - a))
                .collect()
        })
        .collect();
    let data = per_sample(&candidates, |p| {
        if !s.chart.contains(p) {
            return Ok(None);
        }
        let d = point_data(s, p)?;
        let eta = (2.0 * (d.f + shift) / lambda).max(0.0).sqrt();
        Ok(Some((eta, d)))
    })?;
    let eta_min = data.iter().flatten().map(|(e, _)| *e).fold(f64::INFINITY, f64::min);
    let radii = radius_grid(eta_min, r_max, count);
    let width = 0.5 * (radii[1] - radii[0]);
    let nf = total as f64;
    // Estimate Σ y over the box and its standard error.
    let estimate = |y: &dyn Fn(f64, &PointData) -> f64| {
        let vals: Vec<f64> = data
            .iter()
            .map(|d| d.as_ref().map_or(0.0, |(e, pd)| y(*e, pd)))
            .collect();
        let mean = crate::sampling::mean(&vals);
        let sd = crate::sampling::stddev(&vals);
        (box_volume * mean, box_volume * sd / nf.sqrt())
    };
    let mut p = empty_profile(
        s,
        shift,
        ProfileMethod::MonteCarlo { points: total, seed },
        radii.clone(),
        eta_min,
    );
    let mut identity_error = Vec::new();
    for &r in &radii {
        let inside = |e: f64| f64::from(u8::from(e < r));
        let shell = |e: f64| f64::from(u8::from((e - r).abs() < width)) / (2.0 * width * lambda * r);
        let (v, v_err) = estimate(&|e, d| d.sqrt_det * inside(e));
        let (t, t_err) = estimate(&|e, d| d.sqrt_det * d.trace * inside(e));
        let (bt, bt_err) = estimate(&|e, d| d.sqrt_det * d.trace * shell(e));
        let (bi, _) = estimate(&|e, d| d.sqrt_det * shell(e));
        p.volume.push(v);
        p.volume_error.push(v_err);
        p.trace_integral.push(t);
        p.boundary_trace.push(bt);
        p.boundary_inverse_gradient.push(bi);
        let n = s.dim() as f64;
        identity_error.push(
            3.0 * ((n * v_err).powi(2) + (t_err / (2.0 * lambda)).powi(2) + (bt_err / (2.0 * lambda)).powi(2)).sqrt(),
        );
    }
    p.volume_derivative = fd_derivative(&radii, &p.volume);
    // rV' inherits the shell-scale noise of V.
    p.identity_error = identity_error
        .iter()
        .zip(&radii)
        .zip(&p.volume_error)
        .map(|((e, r), ve)| e + 3.0 * r * ve / width)
        .collect();
    Ok(p)
}

fn inapplicable(check: &str, label: &str, tol: f64, regime: JetRegime, why: &str) -> CheckReport {
    CheckReport::inapplicable(check, label, tol, regime, why)
}

/// Co-area identity `nV − rV' = −(1/2λ)∫_Ω tr q + (1/2λ)∫_{∂Ω} tr q/|∇f|`
/// and the bound `−½∫_Ω tr q ≤ λnV` at every radius.
pub fn coarea_identity_check(profile: &SublevelProfile, tolerance: Option<f64>) -> CheckReport {
    let n = profile.dim as f64;
    let lambda = profile.lambda;
    let defect = profile.identity_defect();
    let widening = max_of(profile.identity_error.iter().copied());
    let tol = tolerance.unwrap_or(tolerances::COAREA) + widening;
    let remark: Vec<f64> = (0..profile.radii.len())
        .map(|k| lambda * n * profile.volume[k] + 0.5 * profile.trace_integral[k])
        .collect();
    let residuals: Vec<f64> = defect
        .iter()
        .zip(&remark)
        .zip(&profile.identity_error)
        .map(|((d, m), e)| d.abs().max((-m - e).max(0.0)))
        .collect();
    let eq09 = max_of((0..profile.radii.len()).filter(|&k| profile.volume[k] > 0.0).map(|k| {
        let exact = lambda * profile.radii[k] * profile.boundary_inverse_gradient[k];
        (profile.volume_derivative[k] - exact).abs() / exact.abs().max(f64::MIN_POSITIVE)
    }));
    let mut report = CheckReport::from_residuals("coarea", &profile.label, residuals, tol, profile.regime)
        .detail("identity_residual_max", max_of(defect.iter().map(|d| d.abs())))
        .detail(
            "remark_margin_min",
            remark.iter().copied().fold(f64::INFINITY, f64::min),
        )
        .detail("derivative_relative_error_max", eq09)
        .detail("grad_eta_max", profile.grad_eta_max)
        .detail("tolerance_widening", widening)
        .detail("normalization_shift", profile.shift);
    if widening > 0.0 {
        report = report.note("tolerance widened by finite-difference and sampling error estimates");
    }
    if profile.normalization == Normalization::AsGiven {
        report = report.note("profile built from the potential as given, without the Hamilton normalization");
    }
    if let ProfileMethod::MonteCarlo { points, seed } = profile.method {
        report = report
            .note(format!(
                "Monte Carlo volumes over the sample box, {points} points, seed {seed}"
            ))
            .detail("volume_error_max", max_of(profile.volume_error.iter().copied()));
    }
    report
}

/// `r₀ = √((n+2)/λ)`.
pub fn asymptotic_radius(dim: usize, lambda: f64) -> f64 {
    ((dim as f64 + 2.0) / lambda).sqrt()
}

/// Indices in the top half of the grid with `r ≥ 2r₀`.
fn asymptotic_indices(profile: &SublevelProfile) -> Vec<usize> {
    let cut = 2.0 * asymptotic_radius(profile.dim, profile.lambda);
    let m = profile.radii.len();
    (m / 2..m).filter(|&k| profile.radii[k] >= cut).collect()
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = crate::sampling::mean(x);
    let my = crate::sampling::mean(y);
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn sampling_widening(profile: &SublevelProfile, idx: &[usize]) -> f64 {
    3.0 * max_of(idx.iter().map(|&k| profile.volume_error[k] / profile.volume[k]))
}

/// Polynomial upper growth `V(r) ≤ C₁rⁿ`: `log(V/rⁿ)` must not increase on
/// the asymptotic part of the grid.
pub fn upper_volume_check(profile: &SublevelProfile) -> CheckReport {
    const NAME: &str = "upper_volume";
    let n = profile.dim as f64;
    let idx = asymptotic_indices(profile);
    let base_tol = tolerances::VOLUME_SLOPE;
    if idx.len() < 3 {
        return inapplicable(
            NAME,
            &profile.label,
            base_tol,
            profile.regime,
            "the grid does not reach 2r₀",
        );
    }
    if idx.iter().any(|&k| profile.volume[k] <= 0.0) {
        return inapplicable(
            NAME,
            &profile.label,
            base_tol,
            profile.regime,
            "empty sublevel sets on the asymptotic grid",
        );
    }
    let tol = base_tol + sampling_widening(profile, &idx);
    let logr: Vec<f64> = idx.iter().map(|&k| profile.radii[k].ln()).collect();
    let ratio: Vec<f64> = idx
        .iter()
        .map(|&k| profile.volume[k].ln() - n * profile.radii[k].ln())
        .collect();
    let residuals: Vec<f64> = ratio.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
    let c = 2.0 * (profile.anchor_potential.max(0.0) / (2.0 * profile.lambda)).sqrt();
    let c1 = idx
        .iter()
        .filter(|&&k| profile.radii[k] > c)
        .map(|&k| profile.volume[k] / (profile.radii[k] - c).powf(n))
        .fold(0.0, f64::max);
    let r0 = asymptotic_radius(profile.dim, profile.lambda);
    let chain_first = n / (profile.lambda * r0 * r0) <= n / (n + 2.0) + 1e-12;
    let chain_second = n / (n + 2.0) <= 0.5 + 1e-12;
    let mut report = CheckReport::from_residuals(NAME, &profile.label, residuals, tol, profile.regime)
        .detail("log_slope", least_squares_slope(&logr, &ratio))
        .detail("C1", c1)
        .detail("translation", c)
        .detail("r0", r0)
        .detail("asymptotic_radii", idx.len() as f64)
        .detail("constant_chain_first", f64::from(u8::from(chain_first)))
        .detail("constant_chain_second", f64::from(u8::from(chain_second)));
    if !chain_second {
        report = report.note(format!(
            "n/(n+2) ≤ 1/2 fails in dimension {}; the bound is checked numerically",
            profile.dim
        ));
    } else if profile.dim == 2 {
        report = report.note("n/(n+2) ≤ 1/2 is tight in dimension 2");
    }
    report
}

/// `max G(r)/V(r)` over the asymptotic grid.
pub fn measured_average(profile: &SublevelProfile) -> f64 {
    let g = profile.g_integral();
    asymptotic_indices(profile)
        .into_iter()
        .filter(|&k| profile.volume[k] > 0.0)
        .map(|k| g[k] / profile.volume[k])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower growth `V(r) ≥ C₂ r^{n − δ/(2λ²)}` given `G/V ≤ δ < 2nλ²`;
/// `δ` defaults to the measured average.
pub fn lower_volume_check(profile: &SublevelProfile, delta: Option<f64>) -> CheckReport {
    const NAME: &str = "lower_volume";
    let n = profile.dim as f64;
    let lambda = profile.lambda;
    let idx = asymptotic_indices(profile);
    let base_tol = tolerances::VOLUME_SLOPE;
    let label = &profile.label;
    if idx.len() < 3 || idx.iter().any(|&k| profile.volume[k] <= 0.0) {
        return inapplicable(
            NAME,
            label,
            base_tol,
            profile.regime,
            "the grid does not reach nonempty sets beyond 2r₀",
        );
    }
    let measured = measured_average(profile);
    let delta = delta.unwrap_or(measured);
    let limit = 2.0 * n * lambda * lambda;
    if delta < measured - 1e-9 * measured.abs().max(1.0) {
        return inapplicable(
            NAME,
            label,
            base_tol,
            profile.regime,
            "the supplied δ is below the measured average of −λ tr q",
        )
        .detail("delta", delta)
        .detail("measured_delta", measured);
    }
    if delta >= limit {
        return inapplicable(NAME, label, base_tol, profile.regime, "δ ≥ 2nλ²")
            .detail("delta", delta)
            .detail("delta_limit", limit);
    }
    let exponent = n - delta / (2.0 * lambda * lambda);
    let tol = base_tol + sampling_widening(profile, &idx);
    let ratio: Vec<f64> = idx
        .iter()
        .map(|&k| profile.volume[k].ln() - exponent * profile.radii[k].ln())
        .collect();
    let residuals: Vec<f64> = ratio.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect();
    let c2 = idx
        .iter()
        .map(|&k| profile.volume[k] / profile.radii[k].powf(exponent))
        .fold(f64::INFINITY, f64::min);
    let mut report = CheckReport::from_residuals(NAME, label, residuals, tol, profile.regime)
        .detail("delta", delta)
        .detail("measured_delta", measured)
        .detail("delta_limit", limit)
        .detail("exponent", exponent)
        .detail("C2", c2);
    if !(c2 > 0.0) {
        report.verdict = crate::report::Verdict::Fail;
        report = report.note("fitted C2 is not positive");
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let r = radius_grid(0.0, 4.0, 16);
        let v: Vec<f64> = r.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        for (d, x) in fd_derivative(&r, &v).iter().zip(&r) {
            assert!((d - (6.0 * x - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn super_polynomial_synthetic_profile_fails_upper_check() {
        let r = radius_grid(0.0, 12.0, 64);
        let v: Vec<f64> = r.iter().map(|x| x.powi(3)).collect();
        let p = SublevelProfile::synthetic("synthetic", 2, 0.5, r, v);
        let rep = upper_volume_check(&p);
        assert_eq!(rep.verdict, crate::report::Verdict::Fail);
        assert!((rep.details["log_slope"] - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn euclidean_balls_pass_both_growth_checks(n in 1usize..5, scale in 0.1f64..10.0) {
            let r = radius_grid(0.0, 12.0, 64);
            let v: Vec<f64> = r.iter().map(|x| scale * x.powi(n as i32)).collect();
            let p = SublevelProfile::synthetic("balls", n, 0.5, r, v);
            prop_assert!(upper_volume_check(&p).passed());
            let low = lower_volume_check(&p, Some(0.0));
            prop_assert!(low.passed());
            prop_assert!((low.details["C2"] - scale).abs() < 1e-9 * scale);
        }
    }
}
