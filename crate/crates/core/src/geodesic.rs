//! Geodesics with a parallel-transported frame, and distance estimates.

use std::io::Write;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::geometry::christoffel_values;
use crate::linalg::{frame_from, metric_norm};
use crate::tensor::Tensor;
use crate::tolerances;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSample {
    pub s: f64,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Parallel frame; `frame[0]` is the initial velocity transported.
    pub frame: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct GeodesicTrace {
    pub start: Vec<f64>,
    pub initial_velocity: Vec<f64>,
    pub step: f64,
    pub s_max: f64,
    pub samples: Vec<GeodesicSample>,
    /// Integration stopped at the chart boundary before `s_max`.
    pub exited: bool,
}

impl GeodesicTrace {
    pub fn end(&self) -> &GeodesicSample {
        self.samples.last().expect("traces hold the start sample")
    }

    /// Largest parameter reached.
    pub fn length(&self) -> f64 {
        self.end().s
    }

    /// Largest deviation of `|γ'|_g` from 1.
    pub fn speed_drift(&self, chart: &Chart) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for smp in &self.samples {
            let g = chart.metric_at(&smp.point)?;
            worst = worst.max((metric_norm(&g, &smp.velocity) - 1.0).abs());
        }
        Ok(worst)
    }

    /// Largest entry of `EᵀgE − I` over the trace.
    pub fn frame_drift(&self, chart: &Chart) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for smp in &self.samples {
            let g = chart.metric_at(&smp.point)?;
            for (a, ea) in smp.frame.iter().enumerate() {
                for (b, eb) in smp.frame.iter().enumerate() {
                    let mut d = 0.0;
                    for i in 0..ea.len() {
                        for j in 0..eb.len() {
                            d += g[(i, j)] * ea[i] * eb[j];
                        }
                    }
                    worst = worst.max((d - f64::from(a == b)).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Cubic Hermite interpolation of position and velocity at parameter `s`.
    pub fn state_at(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let k = ((s / self.step).floor() as usize).min(self.samples.len().saturating_sub(2));
        let (a, b) = (&self.samples[k], &self.samples[(k + 1).min(self.samples.len() - 1)]);
        let h = b.s - a.s;
        if h <= 0.0 {
            return (a.point.clone(), a.velocity.clone());
        }
        let t = ((s - a.s) / h).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        let n = a.point.len();
        let x = (0..n)
            .map(|i| h00 * a.point[i] + h10 * h * a.velocity[i] + h01 * b.point[i] + h11 * h * b.velocity[i])
            .collect();
        let v = (0..n)
            .map(|i| d00 * a.point[i] + d10 * a.velocity[i] + d01 * b.point[i] + d11 * b.velocity[i])
            .collect();
        (x, v)
    }

    /// Writes `s`, the coordinates, and any extra per-sample columns.
    pub fn write_csv<W: Write>(&self, out: W, coords: &[String], extra: &[(&str, Vec<f64>)]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["s".to_string()];
        header.extend(coords.iter().cloned());
        header.extend(extra.iter().map(|(name, _)| name.to_string()));
        w.write_record(&header)?;
        for (k, smp) in self.samples.iter().enumerate() {
            let mut row = vec![smp.s.to_string()];
            row.extend(smp.point.iter().map(f64::to_string));
            for (_, col) in extra {
                row.push(col.get(k).map_or(String::new(), f64::to_string));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rescales a coordinate direction to unit g-length at `x0`.
pub fn unit_direction(chart: &Chart, x0: &[f64], dir: &[f64]) -> Result<Vec<f64>> {
    let norm = metric_norm(&chart.metric_at(x0)?, dir);
    if !(norm > 0.0) {
        return Err(Error::InvalidParam("zero direction".into()));
    }
    Ok(dir.iter().map(|d| d / norm).collect())
}

/// `−Γ^k_ij a^i b^j`.
fn contract(gm: &Tensor<f64>, a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += gm.at3(k, i, j) * a[i] * b[j];
                }
            }
            -acc
        })
        .collect()
}

/// State layout: position, velocity, then the frame vectors.
fn rhs(chart: &Chart, y: &[f64], n: usize) -> Result<Vec<f64>> {
    let (x, rest) = y.split_at(n);
    let v = &rest[..n];
    let gm = christoffel_values(chart, x)?;
    let mut out = Vec::with_capacity(y.len());
    out.extend_from_slice(v);
    out.extend(contract(&gm, v, v));
    for e in rest[n..].chunks(n) {
        out.extend(contract(&gm, v, e));
    }
    Ok(out)
}

fn axpy(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One classical Runge–Kutta step; `None` when a stage leaves the domain.
fn rk4_step(chart: &Chart, y: &[f64], h: f64, n: usize) -> Result<Option<Vec<f64>>> {
    let inside = |z: &[f64]| chart.contains(&z[..n]);
    let k1 = rhs(chart, y, n)?;
    let y2 = axpy(y, h / 2.0, &k1);
    if !inside(&y2) {
        return Ok(None);
    }
    let k2 = rhs(chart, &y2, n)?;
    let y3 = axpy(y, h / 2.0, &k2);
    if !inside(&y3) {
        return Ok(None);
    }
    let k3 = rhs(chart, &y3, n)?;
    let y4 = axpy(y, h, &k3);
    if !inside(&y4) {
        return Ok(None);
    }
    let k4 = rhs(chart, &y4, n)?;
    let next: Vec<f64> = (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(inside(&next).then_some(next))
}

fn sample_from(s: f64, y: &[f64], n: usize) -> GeodesicSample {
    GeodesicSample {
        s,
        point: y[..n].to_vec(),
        velocity: y[n..2 * n].to_vec(),
        frame: y[2 * n..].chunks(n).map(<[f64]>::to_vec).collect(),
    }
}

/// Integrates the unit-speed geodesic from `x0` with velocity `v0` up to
/// parameter `s_max` with step `h`, transporting a frame whose first
/// vector is `v0`.
pub fn integrate_geodesic(chart: &Chart, x0: &[f64], v0: &[f64], s_max: f64, h: f64) -> Result<GeodesicTrace> {
    let n = chart.dim();
    if x0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len().min(v0.len()),
        });
    }
    if !(h > 0.0) || !(s_max >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "step {h} and length {s_max} must be positive"
        )));
    }
    if !chart.contains(x0) {
        return Err(Error::OutsideDomain { point: x0.to_vec() });
    }
    let g = chart.metric_at(x0)?;
    let speed = metric_norm(&g, v0);
    if (speed - 1.0).abs() > tolerances::GEODESIC_DRIFT {
        return Err(Error::InvalidParam(format!(
            "initial velocity has length {speed}, expected 1"
        )));
    }
    let frame = frame_from(&g, v0).ok_or_else(|| Error::NotPositiveDefinite { point: x0.to_vec() })?;

    let mut y: Vec<f64> = x0.iter().chain(v0).copied().collect();
    frame.iter().for_each(|e| y.extend_from_slice(e));
    let steps = (s_max / h).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample_from(0.0, &y, n));
    let mut exited = false;
    for k in 1..=steps {
        match rk4_step(chart, &y, h, n)? {
            Some(next) => {
                y = next;
                samples.push(sample_from(k as f64 * h, &y, n));
            }
            None => {
                exited = true;
                break;
            }
        }
    }
    Ok(GeodesicTrace {
        start: x0.to_vec(),
        initial_velocity: v0.to_vec(),
        step: h,
        s_max,
        samples,
        exited,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMethod {
    /// Closed-form product or space-form distance.
    ClosedForm,
    /// Length of a shooting geodesic hitting the target.
    Shooting,
    /// Length of the coordinate segment, used when shooting fails.
    Segment,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub method: DistanceMethod,
    /// False when shooting did not converge or its refinement disagreed.
    pub converged: bool,
}

/// Riemannian distance from `x0` to `x`: exact on charts with a known
/// product structure, otherwise an upper bound from curve lengths.
pub fn distance_estimate(chart: &Chart, x0: &[f64], x: &[f64]) -> Result<DistanceEstimate> {
    for p in [x0, x] {
        if !chart.contains(p) {
            return Err(Error::OutsideDomain { point: p.to_vec() });
        }
    }
    if let Some(st) = chart.structure() {
        return Ok(DistanceEstimate {
            value: st.distance(x0, x),
            method: DistanceMethod::ClosedForm,
            converged: true,
        });
    }
    let segment = segment_length(chart, x0, x)?;
    let shot = shoot(chart, x0, x, 64)?;
    let refined = match shot {
        Some(_) => shoot(chart, x0, x, 128)?,
        None => None,
    };
    Ok(match (shot, refined) {
        (Some(a), Some(b)) if b <= segment + tolerances::SHOOTING => DistanceEstimate {
            value: b,
            method: DistanceMethod::Shooting,
            converged: (a - b).abs() <= tolerances::SHOOTING,
        },
        _ => DistanceEstimate {
            value: segment,
            method: DistanceMethod::Segment,
            converged: shot.is_none(),
        },
    })
}

/// Length of the straight coordinate segment by Gauss–Legendre quadrature.
fn segment_length(chart: &Chart, a: &[f64], b: &[f64]) -> Result<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mut total = 0.0;
    for (t, w) in crate::verify::gauss_legendre(0.0, 1.0, 16) {
        let p: Vec<f64> = a.iter().zip(&d).map(|(x, dx)| x + t * dx).collect();
        if !chart.contains(&p) {
            return Ok(f64::INFINITY);
        }
        total += w * metric_norm(&chart.metric_at(&p)?, &d);
    }
    Ok(total)
}

/// Endpoint of the affinely parametrized geodesic `exp_{x0}(v)`.
pub(crate) fn exp_map(chart: &Chart, x0: &[f64], v: &[f64], steps: usize) -> Result<Option<Vec<f64>>> {
    let n = x0.len();
    let mut y: Vec<f64> = x0.iter().chain(v).copied().collect();
    let h = 1.0 / steps as f64;
    for _ in 0..steps {
        let k1 = geo_rhs(chart, &y, n)?;
        let k2 = geo_rhs(chart, &axpy(&y, h / 2.0, &k1), n)?;
        let k3 = geo_rhs(chart, &axpy(&y, h / 2.0, &k2), n)?;
        let k4 = geo_rhs(chart, &axpy(&y, h, &k3), n)?;
        y = (0..y.len())
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if !chart.contains(&y[..n]) {
            return Ok(None);
        }
    }
    Ok(Some(y[..n].to_vec()))
}

fn geo_rhs(chart: &Chart, y: &[f64], n: usize) -> Result<Vec<f64>> {
    if !chart.contains(&y[..n]) {
        return Err(Error::OutsideDomain { point: y[..n].to_vec() });
    }
    let gm = christoffel_values(chart, &y[..n])?;
    let v = &y[n..];
    let mut out = v.to_vec();
    out.extend(contract(&gm, v, v));
    Ok(out)
}

/// Newton iteration on `exp_{x0}(v) = x`; returns `|v|_g` on success.
fn shoot(chart: &Chart, x0: &[f64], x: &[f64], steps: usize) -> Result<Option<f64>> {
    let n = x0.len();
    let mut v: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
    let scale = v.iter().map(|a| a.abs()).fold(1.0, f64::max);
    for _ in 0..40 {
        let end = match exp_map(chart, x0, &v, steps) {
            Ok(Some(e)) => e,
            _ => return Ok(None),
        };
        let r: Vec<f64> = end.iter().zip(x).map(|(a, b)| a - b).collect();
        if r.iter().map(|a| a.abs()).fold(0.0, f64::max) < 1e-11 * scale {
            return Ok(Some(metric_norm(&chart.metric_at(x0)?, &v)));
        }
        let eps = 1e-6 * scale;
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut vp = v.clone();
            vp[j] += eps;
            let ep = match exp_map(chart, x0, &vp, steps) {
                Ok(Some(e)) => e,
                _ => return Ok(None),
            };
            for i in 0..n {
                jac[(i, j)] = (ep[i] - end[i]) / eps;
            }
        }
        let Some(dv) = jac.lu().solve(&nalgebra::DVector::from_vec(r)) else {
            return Ok(None);
        };
        v.iter_mut().zip(dv.iter()).for_each(|(a, d)| *a -= d);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Factor, FactorKind, ProductStructure};
    use crate::expr::Expr;

    fn flat(n: usize) -> Chart {
        let coords = (0..n).map(|i| format!("x{i}")).collect();
        Chart::conformal("flat", coords, Expr::num(1.0)).unwrap()
    }

    #[test]
    fn flat_geodesic_is_a_line() {
        let t = integrate_geodesic(&flat(2), &[0.0, 0.0], &[1.0, 0.0], 3.0, 1e-3).unwrap();
        let end = t.end();
        assert!((end.s - 3.0).abs() < 1e-12);
        assert!((end.point[0] - 3.0).abs() < 1e-12 && end.point[1].abs() < 1e-12);
        assert!(!t.exited);
    }

    #[test]
    fn bad_initial_speed_is_rejected() {
        assert!(integrate_geodesic(&flat(2), &[0.0, 0.0], &[2.0, 0.0], 1.0, 1e-3).is_err());
    }

    #[test]
    fn domain_exit_is_flagged() {
        let chart = flat(1).with_domain(crate::chart::Domain::boxed(&[(-1.0, 1.0)]));
        let t = integrate_geodesic(&chart, &[0.0], &[1.0], 3.0, 1e-2).unwrap();
        assert!(t.exited);
        assert!(t.length() < 1.0);
    }

    #[test]
    fn hermite_interpolation_is_exact_on_lines() {
        let t = integrate_geodesic(&flat(2), &[0.0, 1.0], &[0.6, 0.8], 1.0, 0.1).unwrap();
        let (x, v) = t.state_at(0.55);
        assert!((x[0] - 0.33).abs() < 1e-12 && (x[1] - 1.44).abs() < 1e-12);
        assert!((v[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn shooting_recovers_flat_distance() {
        // A chart without structure forces the shooting route.
        let chart = flat(2);
        let d = distance_estimate(&chart, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_eq!(d.method, DistanceMethod::Shooting);
        assert!((d.value - 5.0).abs() < 1e-9);
        assert!(d.converged);
    }

    #[test]
    fn closed_form_distance_on_products() {
        let chart = flat(3).with_structure(ProductStructure {
            factors: vec![
                Factor {
                    kind: FactorKind::Flat,
                    start: 0,
                    dim: 1,
                },
                Factor {
                    kind: FactorKind::Flat,
                    start: 1,
                    dim: 2,
                },
            ],
        });
        let d = distance_estimate(&chart, &[0.0, 0.0, 0.0], &[1.0, 2.0, 2.0]).unwrap();
        assert_eq!(d.method, DistanceMethod::ClosedForm);
        assert!((d.value - 3.0).abs() < 1e-12);
    }
}
