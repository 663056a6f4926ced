//! Soliton data and the local quantities every check is built from.

use std::sync::Arc;

use crate::chart::{Chart, JetRegime};
use crate::error::Result;
use crate::fields::ScalarField;
use crate::geometry::LocalGeometry;
use crate::jet::Jet;
use crate::qspec::{instantiate, QFields, QSpec};
use crate::tensor::Tensor;

/// A candidate gradient q-soliton `Hess f = λg + ½q`.
#[derive(Clone, Debug)]
pub struct SolitonData {
    pub label: String,
    pub chart: Arc<Chart>,
    /// Potential before the normalization shift.
    pub f: ScalarField,
    pub lambda: f64,
    pub q: QSpec,
    /// Constant `Λ` for `F_Λ = ½|∇f|² − Λf`.
    pub big_lambda: Option<f64>,
    /// Constant `a` added to `f`.
    pub normalization: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolitonKind {
    Shrinking,
    Steady,
    Expanding,
}

impl SolitonData {
    pub fn new(chart: Chart, f: impl Into<ScalarField>, lambda: f64, q: QSpec) -> Result<SolitonData> {
        q.validate(&chart)?;
        Ok(SolitonData {
            label: chart.label().to_string(),
            chart: Arc::new(chart),
            f: f.into(),
            lambda,
            q,
            big_lambda: None,
            normalization: 0.0,
        })
    }

    pub fn with_big_lambda(mut self, big_lambda: f64) -> Self {
        self.big_lambda = Some(big_lambda);
        self
    }

    pub fn with_normalization(mut self, a: f64) -> Self {
        self.normalization = a;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> SolitonKind {
        if self.lambda > 0.0 {
            SolitonKind::Shrinking
        } else if self.lambda < 0.0 {
            SolitonKind::Expanding
        } else {
            SolitonKind::Steady
        }
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Coarsest derivative regime among the metric and the potential.
    pub fn regime(&self) -> JetRegime {
        if self.chart.regime() == JetRegime::Exact && self.f.is_exact() {
            JetRegime::Exact
        } else {
            JetRegime::FiniteDifference
        }
    }

    /// `f + a` at a point.
    pub fn potential(&self, p: &[f64]) -> Result<f64> {
        Ok(self.f.value(p)? + self.normalization)
    }

    pub fn potential_jet(&self, p: &[f64], order: usize) -> Result<Jet> {
        Ok(self.f.jet(p, order)?.add_scalar(self.normalization))
    }

    /// Local quantities with `f` jets of order `f_order` and `q` jets of
    /// order `q_order`.
    pub fn at(&self, p: &[f64], f_order: usize, q_order: usize) -> Result<SolitonPoint> {
        let metric_order = 2.max(f_order.saturating_sub(1)).max(self.q.metric_order(q_order));
        let geo = LocalGeometry::new(&self.chart, p, metric_order)?;
        let f = self.potential_jet(p, f_order)?;
        let q = instantiate(&self.q, &geo, q_order)?;
        Ok(SolitonPoint { geo, f, q })
    }
}

/// Jets of the geometry, potential and flow tensor at one point.
#[derive(Clone, Debug)]
pub struct SolitonPoint {
    pub geo: LocalGeometry,
    pub f: Jet,
    pub q: QFields,
}

impl SolitonPoint {
    pub fn df(&self) -> Vec<Jet> {
        self.geo.differential(&self.f)
    }

    /// `∇f` as a value vector.
    pub fn grad_f(&self) -> Vec<f64> {
        let n = self.geo.dim();
        let gi = self.geo.ginv();
        (0..n)
            .map(|i| (0..n).map(|j| gi.at2(i, j).value() * self.f.d1(j)).sum())
            .collect()
    }

    pub fn grad_norm2(&self) -> f64 {
        let n = self.geo.dim();
        let gi = self.geo.ginv();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += gi.at2(i, j).value() * self.f.d1(i) * self.f.d1(j);
            }
        }
        acc
    }

    /// `Q(∇f)` as a covector: `q_jk ∇^k f`.
    pub fn q_grad_covector(&self) -> Vec<Jet> {
        let n = self.geo.dim();
        let grad = self.geo.raise(&self.df());
        (0..n)
            .map(|j| {
                let mut acc = self.q.q.at2(j, 0) * &grad[0];
                for k in 1..n {
                    acc = acc + self.q.q.at2(j, k) * &grad[k];
                }
                acc
            })
            .collect()
    }

    /// g-norm of a covector given by values.
    pub fn covector_norm(&self, w: &[f64]) -> f64 {
        let n = self.geo.dim();
        let gi = self.geo.ginv();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += gi.at2(i, j).value() * w[i] * w[j];
            }
        }
        acc.max(0.0).sqrt()
    }

    /// g-norm of a (0,2) tensor given by values.
    pub fn tensor_norm(&self, t: &Tensor<f64>) -> f64 {
        let n = self.geo.dim();
        let gi = self.geo.ginv().values();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        acc += gi.at2(i, k) * gi.at2(j, l) * t.at2(i, j) * t.at2(k, l);
                    }
                }
            }
        }
        acc.max(0.0).sqrt()
    }

    /// Soliton defect `Hess f − λg − ½q` as values.
    pub fn soliton_defect(&self, lambda: f64) -> Tensor<f64> {
        let h = self.geo.hessian(&self.f).values();
        let g = self.geo.g().values();
        let q = self.q.q.values();
        Tensor::from_fn(self.geo.dim(), 2, |idx| {
            let (i, j) = (idx[0], idx[1]);
            h.at2(i, j) - lambda * g.at2(i, j) - 0.5 * q.at2(i, j)
        })
    }

    /// `H = |∇f|² − ½ tr q − 2λf` as a jet.
    pub fn hamilton_jet(&self, lambda: f64) -> Jet {
        let df = self.df();
        let grad2 = self.geo.inner_covec(&df, &df);
        let f = self.f.truncate(grad2.order());
        &(&grad2 - &(&self.q.trace * 0.5)) - &(f * (2.0 * lambda))
    }

    /// Hamilton defect `Q(∇f) − ½∇tr q` as covector values.
    pub fn hamilton_defect(&self) -> Vec<f64> {
        let qg = self.q_grad_covector();
        (0..self.geo.dim())
            .map(|j| qg[j].value() - 0.5 * self.q.trace.d1(j))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn gaussian_defects_vanish() {
        let coords: Vec<String> = vec!["x".into(), "y".into()];
        let chart = Chart::conformal("flat", coords.clone(), Expr::num(1.0)).unwrap();
        let f = Expr::parse("(x^2 + y^2)/4", &coords).unwrap();
        let s = SolitonData::new(chart, f, 0.5, QSpec::Zero).unwrap();
        assert_eq!(s.kind(), SolitonKind::Shrinking);
        let pt = s.at(&[0.7, -1.2], 2, 1).unwrap();
        assert!(pt.soliton_defect(0.5).max_abs() < 1e-15);
        assert!(pt.hamilton_jet(0.5).value().abs() < 1e-15);
        assert!(pt.hamilton_defect().iter().all(|v| v.abs() < 1e-15));
        assert!((pt.grad_norm2() - (0.49 + 1.44) / 4.0).abs() < 1e-15);
    }
}
