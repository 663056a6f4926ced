//! Coordinate charts carrying a Riemannian metric.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fd;
use crate::jet::Jet;
use crate::tensor::Tensor;

/// How jets of the metric are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JetRegime {
    Exact,
    FiniteDifference,
}

impl fmt::Display for JetRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JetRegime::Exact => "exact",
            JetRegime::FiniteDifference => "finite-difference",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// `lo < x[coord] < hi`
    Interval { coord: usize, lo: f64, hi: f64 },
    /// `Σ x[c]² < radius²` over the listed coordinates.
    Ball { coords: Vec<usize>, radius: f64 },
}

/// Open subset of coordinate space; empty means all of `ℝⁿ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Domain {
    pub constraints: Vec<Constraint>,
}

impl Domain {
    pub fn all() -> Domain {
        Domain::default()
    }

    pub fn boxed(bounds: &[(f64, f64)]) -> Domain {
        Domain {
            constraints: bounds
                .iter()
                .enumerate()
                .map(|(coord, &(lo, hi))| Constraint::Interval { coord, lo, hi })
                .collect(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.constraints.iter().all(|c| match c {
            Constraint::Interval { coord, lo, hi } => p[*coord] > *lo && p[*coord] < *hi,
            Constraint::Ball { coords, radius } => coords.iter().map(|&i| p[i] * p[i]).sum::<f64>() < radius * radius,
        })
    }

    pub fn is_all(&self) -> bool {
        self.constraints.is_empty()
    }
}

/// Model geometry of one factor in a product chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorKind {
    /// Euclidean coordinates.
    Flat,
    /// Round sphere in stereographic coordinates, `4a²/(1+|u|²)² δ`.
    Sphere { radius: f64 },
    /// Hyperbolic space in the Poincaré ball, `4a²/(1−|u|²)² δ`.
    Hyperbolic { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factor {
    pub kind: FactorKind,
    pub start: usize,
    pub dim: usize,
}

impl Factor {
    fn slice<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.start..self.start + self.dim]
    }

    /// Riemannian distance between two points within this factor.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        let (u, v) = (self.slice(p), self.slice(q));
        let diff2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        match self.kind {
            FactorKind::Flat => diff2.sqrt(),
            FactorKind::Sphere { radius } => {
                let x = stereo_embed(u);
                let y = stereo_embed(v);
                let chord: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                2.0 * radius * (chord / 2.0).min(1.0).asin()
            }
            FactorKind::Hyperbolic { radius } => {
                let nu: f64 = u.iter().map(|a| a * a).sum();
                let nv: f64 = v.iter().map(|a| a * a).sum();
                radius * (1.0 + 2.0 * diff2 / ((1.0 - nu) * (1.0 - nv))).acosh()
            }
        }
    }

    /// Total volume of the factor, `None` when infinite.
    pub fn volume(&self) -> Option<f64> {
        match self.kind {
            FactorKind::Sphere { radius } => Some(sphere_area(self.dim) * radius.powi(self.dim as i32)),
            _ => None,
        }
    }

    /// Distance to the cut locus along any geodesic, `None` when unbounded.
    pub fn injectivity_radius(&self) -> Option<f64> {
        match self.kind {
            FactorKind::Sphere { radius } => Some(std::f64::consts::PI * radius),
            _ => None,
        }
    }
}

/// Unit-sphere embedding of a stereographic coordinate.
fn stereo_embed(u: &[f64]) -> Vec<f64> {
    let r2: f64 = u.iter().map(|a| a * a).sum();
    let mut x: Vec<f64> = u.iter().map(|a| 2.0 * a / (1.0 + r2)).collect();
    x.push((r2 - 1.0) / (1.0 + r2));
    x
}

/// Area of the unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // |S⁰| = 2, |S¹| = 2π, |Sⁿ| = 2π/(n−1) |Sⁿ⁻²|
    let mut area = if n.is_multiple_of(2) { 2.0 } else { 2.0 * PI };
    let mut k = if n.is_multiple_of(2) { 0 } else { 1 };
    while k < n {
        k += 2;
        area *= 2.0 * PI / (k as f64 - 1.0);
    }
    area
}

/// Known product decomposition of a chart's metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductStructure {
    pub factors: Vec<Factor>,
}

impl ProductStructure {
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|f| f.distance(p, q).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn flat_factor(&self) -> Option<&Factor> {
        self.factors.iter().find(|f| f.kind == FactorKind::Flat)
    }

    /// Product of the volumes of all compact factors.
    pub fn compact_volume(&self) -> f64 {
        self.factors.iter().filter_map(Factor::volume).product()
    }

    pub fn is_compact(&self) -> bool {
        self.factors.iter().all(|f| f.volume().is_some())
    }
}

pub type MetricFn = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

#[derive(Clone)]
pub enum MetricSource {
    /// Upper-triangle entries `g_ij`, `i ≤ j`, row by row.
    Expressions(Vec<Expr>),
    /// Values only; derivatives come from finite differences.
    Function(MetricFn),
}

impl fmt::Debug for MetricSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSource::Expressions(e) => f.debug_tuple("Expressions").field(e).finish(),
            MetricSource::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Metric and inverse metric jets at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: Tensor<Jet>,
    pub ginv: Tensor<Jet>,
    pub regime: JetRegime,
}

#[derive(Clone, Debug)]
pub struct Chart {
    label: String,
    coords: Vec<String>,
    domain: Domain,
    sample_box: Vec<(f64, f64)>,
    metric: MetricSource,
    regime: JetRegime,
    anchor: Vec<f64>,
    compact: bool,
    structure: Option<ProductStructure>,
}

pub(crate) fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl Chart {
    /// A chart with exact metric expressions. `entries` lists the upper
    /// triangle `g_11, g_12, …, g_1n, g_22, …, g_nn`.
    pub fn new(label: impl Into<String>, coords: Vec<String>, entries: Vec<Expr>) -> Result<Chart> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidParam("chart needs at least one coordinate".into()));
        }
        let expected = n * (n + 1) / 2;
        if entries.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: entries.len(),
            });
        }
        if let Some(max) = entries.iter().filter_map(Expr::max_var).max() {
            if max >= n {
                return Err(Error::InvalidParam(format!("metric references coordinate {max}")));
            }
        }
        Ok(Chart {
            label: label.into(),
            coords,
            domain: Domain::all(),
            sample_box: vec![(-1.0, 1.0); n],
            metric: MetricSource::Expressions(entries),
            regime: JetRegime::Exact,
            anchor: vec![0.0; n],
            compact: false,
            structure: None,
        })
    }

    /// A chart whose metric is only available pointwise.
    pub fn from_fn(label: impl Into<String>, coords: Vec<String>, metric: MetricFn) -> Chart {
        let n = coords.len();
        Chart {
            label: label.into(),
            coords,
            domain: Domain::all(),
            sample_box: vec![(-1.0, 1.0); n],
            metric: MetricSource::Function(metric),
            regime: JetRegime::FiniteDifference,
            anchor: vec![0.0; n],
            compact: false,
            structure: None,
        }
    }

    /// Diagonal metric `g = φ δ` with conformal factor `φ`.
    pub fn conformal(label: impl Into<String>, coords: Vec<String>, factor: Expr) -> Result<Chart> {
        let n = coords.len();
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                entries.push(if i == j { factor.clone() } else { Expr::num(0.0) });
            }
        }
        Chart::new(label, coords, entries)
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_sample_box(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.sample_box = bounds;
        self
    }

    pub fn with_anchor(mut self, anchor: Vec<f64>) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn with_compact(mut self, compact: bool) -> Self {
        self.compact = compact;
        self
    }

    pub fn with_structure(mut self, structure: ProductStructure) -> Self {
        self.compact = structure.is_compact();
        self.structure = Some(structure);
        self
    }

    /// Switches metric jets to the finite-difference route.
    pub fn with_finite_differences(mut self) -> Self {
        self.regime = JetRegime::FiniteDifference;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn regime(&self) -> JetRegime {
        self.regime
    }

    /// True when the chart covers a closed manifold up to a null set.
    pub fn is_compact(&self) -> bool {
        self.compact
    }

    pub fn structure(&self) -> Option<&ProductStructure> {
        self.structure.as_ref()
    }

    pub fn metric_source(&self) -> &MetricSource {
        &self.metric
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().all(|v| v.is_finite()) && self.domain.contains(p)
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(Error::OutsideDomain { point: p.to_vec() });
        }
        Ok(())
    }

    fn raw_metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        match &self.metric {
            MetricSource::Expressions(entries) => {
                let vals = entries.iter().map(|e| e.eval_f64(p)).collect::<Result<Vec<_>>>()?;
                Ok(DMatrix::from_fn(n, n, |i, j| vals[upper_index(n, i, j)]))
            }
            MetricSource::Function(f) => {
                let m = f(p)?;
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: m.nrows(),
                    });
                }
                Ok(m)
            }
        }
    }

    /// Metric components at `p`, verified positive definite.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let g = self.raw_metric(p)?;
        if g.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { point: p.to_vec() });
        }
        Ok(g)
    }

    /// Metric jets of the given order and the matching inverse-metric jets.
    pub fn metric_jet(&self, p: &[f64], order: usize) -> Result<MetricJet> {
        let g0 = self.metric_at(p)?;
        let n = self.dim();
        let g = match (&self.metric, self.regime) {
            (MetricSource::Expressions(entries), JetRegime::Exact) => {
                let vars: Vec<Jet> = (0..n).map(|i| Jet::variable(n, order, i, p[i])).collect();
                let jets = entries.iter().map(|e| e.eval(&vars)).collect::<Result<Vec<_>>>()?;
                Tensor::from_fn(n, 2, |idx| jets[upper_index(n, idx[0], idx[1])].clone())
            }
            _ => {
                let count = n * (n + 1) / 2;
                let jets = fd::jets_from_values(p, order, count, |x| {
                    let m = self.raw_metric(x)?;
                    let mut out = Vec::with_capacity(count);
                    for i in 0..n {
                        for j in i..n {
                            out.push(m[(i, j)]);
                        }
                    }
                    Ok(out)
                })?;
                Tensor::from_fn(n, 2, |idx| jets[upper_index(n, idx[0], idx[1])].clone())
            }
        };
        let inv0 = g0
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite { point: p.to_vec() })?;
        let ginv = invert_jet_matrix(&g, &inv0);
        Ok(MetricJet {
            g,
            ginv,
            regime: self.regime,
        })
    }
}

/// Newton iteration `X ← X(2I − GX)` from the value inverse; each step
/// doubles the number of correct Taylor orders.
fn invert_jet_matrix(g: &Tensor<Jet>, inv0: &DMatrix<f64>) -> Tensor<Jet> {
    let n = g.dim();
    let order = g.order();
    let proto = g.at2(0, 0);
    let mut x = Tensor::from_fn(n, 2, |idx| proto.lift(inv0[(idx[0], idx[1])]));
    let mut correct = 0;
    while correct < order {
        let gx = matmul(g, &x);
        let two_minus = Tensor::from_fn(n, 2, |idx| {
            let v = -gx.at2(idx[0], idx[1]);
            if idx[0] == idx[1] {
                v.add_scalar(2.0)
            } else {
                v
            }
        });
        x = matmul(&x, &two_minus);
        correct = 2 * correct + 1;
    }
    x
}

fn matmul(a: &Tensor<Jet>, b: &Tensor<Jet>) -> Tensor<Jet> {
    let n = a.dim();
    Tensor::from_fn(n, 2, |idx| {
        let (i, j) = (idx[0], idx[1]);
        let mut acc = a.at2(i, 0) * b.at2(0, j);
        for k in 1..n {
            acc = acc + a.at2(i, k) * b.at2(k, j);
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{}", i + 1)).collect()
    }

    fn sphere2() -> Chart {
        let r2 = Expr::sum_of_squares(0..2);
        let factor = Expr::num(4.0) / (Expr::num(1.0) + r2).powf(2.0);
        Chart::conformal("s2", coords(2), factor).unwrap()
    }

    #[test]
    fn inverse_jets_are_inverse() {
        let chart = sphere2();
        let m = chart.metric_jet(&[0.3, -0.7], 4).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = m.g.at2(i, 0) * m.ginv.at2(0, j);
                acc = acc + m.g.at2(i, 1) * m.ginv.at2(1, j);
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((acc.value() - target).abs() < 1e-14);
                for c in &acc.coeffs()[1..] {
                    assert!(c.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn finite_difference_route_tracks_exact() {
        let exact = sphere2();
        let fd = sphere2().with_finite_differences();
        let p = [0.2, 0.5];
        let a = exact.metric_jet(&p, 3).unwrap();
        let b = fd.metric_jet(&p, 3).unwrap();
        assert_eq!(b.regime, JetRegime::FiniteDifference);
        for (x, y) in a.g.data().iter().zip(b.g.data()) {
            for (u, v) in x.coeffs().iter().zip(y.coeffs()) {
                assert!((u - v).abs() < 1e-5, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn domain_and_definiteness_errors() {
        let chart = sphere2().with_domain(Domain::boxed(&[(-1.0, 1.0), (-1.0, 1.0)]));
        assert!(matches!(chart.metric_at(&[2.0, 0.0]), Err(Error::OutsideDomain { .. })));
        let bad = Chart::new("bad", coords(2), vec![Expr::num(1.0), Expr::num(2.0), Expr::num(1.0)]).unwrap();
        assert!(matches!(
            bad.metric_at(&[0.0, 0.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn space_form_distances() {
        let sphere = Factor {
            kind: FactorKind::Sphere { radius: 2.0 },
            start: 0,
            dim: 2,
        };
        // origin is the south pole; u → ∞ is the north pole
        let d = sphere.distance(&[0.0, 0.0], &[1.0, 0.0]);
        assert!((d - 2.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let hyp = Factor {
            kind: FactorKind::Hyperbolic { radius: 1.0 },
            start: 0,
            dim: 1,
        };
        // d(0, t) = 2 artanh(t)
        assert!((hyp.distance(&[0.0], &[0.5]) - 2.0 * 0.5f64.atanh()).abs() < 1e-12);
        assert!((sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(3) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!((sphere_area(1) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
