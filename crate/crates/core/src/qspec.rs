//! Flow tensors `q` and their derived fields.

use std::fmt;

use crate::chart::{upper_index, Chart};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::LocalGeometry;
use crate::jet::Jet;
use crate::tensor::Tensor;

/// Which symmetric (0,2) tensor drives the flow `∂g/∂t = q`.
#[derive(Clone, Debug, PartialEq)]
pub enum QSpec {
    Zero,
    /// `q = −2 Ric`
    Ricci,
    /// `q = −2(Ric − ρ R g)`
    Bourguignon {
        rho: f64,
    },
    /// `q = B`, the Bach tensor (dimension 4 only).
    Bach,
    /// Upper-triangle component expressions in chart coordinates.
    Custom(Vec<Expr>),
}

impl fmt::Display for QSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QSpec::Zero => f.write_str("zero"),
            QSpec::Ricci => f.write_str("ricci"),
            QSpec::Bourguignon { rho } => write!(f, "bourguignon rho={rho:?}"),
            QSpec::Bach => f.write_str("bach"),
            QSpec::Custom(_) => f.write_str("custom"),
        }
    }
}

impl QSpec {
    /// Metric jet order needed for `q` jets of order `q_order`.
    pub fn metric_order(&self, q_order: usize) -> usize {
        match self {
            QSpec::Zero | QSpec::Custom(_) => 0,
            QSpec::Ricci | QSpec::Bourguignon { .. } => q_order + 2,
            QSpec::Bach => q_order + 4,
        }
    }

    pub fn validate(&self, chart: &Chart) -> Result<()> {
        let n = chart.dim();
        match self {
            QSpec::Bach if n != 4 => Err(Error::DimensionMismatch { expected: 4, got: n }),
            QSpec::Custom(c) if c.len() != n * (n + 1) / 2 => Err(Error::DimensionMismatch {
                expected: n * (n + 1) / 2,
                got: c.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Jets of `q` of order `q_order`; `geo` must carry metric jets of
    /// order at least [`QSpec::metric_order`].
    pub fn jets(&self, geo: &LocalGeometry, q_order: usize) -> Result<Tensor<Jet>> {
        let n = geo.dim();
        if geo.order() < self.metric_order(q_order) {
            return Err(Error::InvalidParam(format!(
                "q of order {q_order} needs metric order {}, have {}",
                self.metric_order(q_order),
                geo.order()
            )));
        }
        Ok(match self {
            QSpec::Zero => Tensor::from_fn(n, 2, |_| Jet::constant(n, q_order, 0.0)),
            QSpec::Ricci => geo.ricci().truncate(q_order).map(|r| r * -2.0),
            QSpec::Bourguignon { rho } => {
                let ric = geo.ricci().truncate(q_order);
                let rg = geo.g().truncate(q_order).map(|g| g * geo.scalar());
                Tensor::from_fn(n, 2, |idx| {
                    (ric.at2(idx[0], idx[1]) - &(rg.at2(idx[0], idx[1]) * *rho)) * -2.0
                })
            }
            QSpec::Bach => bach_jets(geo)?.truncate(q_order),
            QSpec::Custom(c) => {
                let p = geo.point();
                let vars: Vec<Jet> = (0..n).map(|i| Jet::variable(n, q_order, i, p[i])).collect();
                let jets = c.iter().map(|e| e.eval(&vars)).collect::<Result<Vec<_>>>()?;
                Tensor::from_fn(n, 2, |idx| jets[upper_index(n, idx[0], idx[1])].clone())
            }
        })
    }
}

/// `B_ij = ∇^k∇^l W_kijl + ½ R^kl W_kijl` from metric jets of order ≥ 4.
pub fn bach_jets(geo: &LocalGeometry) -> Result<Tensor<Jet>> {
    let n = geo.dim();
    if n != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: n });
    }
    if geo.order() < 4 {
        return Err(Error::InvalidParam("Bach tensor needs metric order >= 4".into()));
    }
    let w = geo.weyl()?;
    // V_kij = g^{lb} ∇_b W_kijl, then ∇^k∇^l W_kijl = g^{ka} ∇_a V_kij.
    let dw = geo.covariant_derivative(&w);
    let gi1 = geo.ginv().truncate(dw.order());
    let v = Tensor::from_fn(n, 3, |idx| {
        let (k, i, j) = (idx[0], idx[1], idx[2]);
        let mut acc = gi1.at2(0, 0).zero_like();
        for l in 0..n {
            for b in 0..n {
                acc = acc + gi1.at2(l, b) * dw.get(&[b, k, i, j, l]);
            }
        }
        acc
    });
    let dv = geo.covariant_derivative(&v);
    let ord = dv.order();
    let gi = geo.ginv().truncate(ord);
    let ric = geo.ricci().truncate(ord);
    // R^{kl} = g^{ka} g^{lb} Ric_ab
    let ric_up = Tensor::from_fn(n, 2, |idx| {
        let mut acc = gi.at2(0, 0).zero_like();
        for a in 0..n {
            for b in 0..n {
                acc = acc + gi.at2(idx[0], a) * gi.at2(idx[1], b) * ric.at2(a, b);
            }
        }
        acc
    });
    let w = w.truncate(ord);
    Ok(Tensor::from_fn(n, 2, |idx| {
        let (i, j) = (idx[0], idx[1]);
        let mut acc = gi.at2(0, 0).zero_like();
        for k in 0..n {
            for a in 0..n {
                acc = acc + gi.at2(k, a) * dv.at4(a, k, i, j);
            }
            for l in 0..n {
                acc = acc + ric_up.at2(k, l) * w.at4(k, i, j, l) * 0.5;
            }
        }
        acc
    }))
}

/// Bach tensor values at a point of a 4-dimensional chart.
pub fn bach_tensor(chart: &Chart, p: &[f64]) -> Result<Tensor<f64>> {
    if chart.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: chart.dim(),
        });
    }
    let geo = LocalGeometry::new(chart, p, 4)?;
    Ok(bach_jets(&geo)?.values())
}

/// `q` with its trace, norm and mixed form at a point.
#[derive(Clone, Debug)]
pub struct QFields {
    pub q: Tensor<Jet>,
    pub trace: Jet,
    pub norm2: Jet,
}

impl QFields {
    /// `Q^i_j = g^{ik} q_kj` at the base point.
    pub fn mixed(&self, geo: &LocalGeometry) -> Tensor<f64> {
        let n = geo.dim();
        let gi = geo.ginv().values();
        let q = self.q.values();
        Tensor::from_fn(n, 2, |idx| (0..n).map(|k| gi.at2(idx[0], k) * q.at2(k, idx[1])).sum())
    }
}

pub fn instantiate(spec: &QSpec, geo: &LocalGeometry, q_order: usize) -> Result<QFields> {
    let q = spec.jets(geo, q_order)?;
    let trace = geo.trace(&q);
    let norm2 = geo.inner2(&q, &q);
    Ok(QFields { q, trace, norm2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{}", i + 1)).collect()
    }

    #[test]
    fn flat_bach_vanishes() {
        let chart = Chart::conformal("flat4", coords(4), Expr::num(1.0)).unwrap();
        let b = bach_tensor(&chart, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(b.max_abs() < 1e-14);
    }

    #[test]
    fn ricci_trace_and_norm_identities() {
        let r2 = Expr::sum_of_squares(0..3);
        let chart = Chart::conformal("s3", coords(3), Expr::num(8.0) / (Expr::num(1.0) + r2).powf(2.0)).unwrap();
        let geo = LocalGeometry::new(&chart, &[0.2, 0.1, -0.5], 2).unwrap();
        let fields = instantiate(&QSpec::Ricci, &geo, 0).unwrap();
        let r = geo.scalar().value();
        assert!((fields.trace.value() + 2.0 * r).abs() < 1e-12);
        let ric = geo.ricci().truncate(0);
        let ric_norm = geo.inner2(&ric, &ric).value();
        assert!((fields.norm2.value() - 4.0 * ric_norm).abs() < 1e-12);
        let b0 = instantiate(&QSpec::Bourguignon { rho: 0.0 }, &geo, 0).unwrap();
        assert!(b0.q.values().max_abs_diff(&fields.q.values()) < 1e-12);
    }

    #[test]
    fn bach_needs_dimension_four() {
        let chart = Chart::conformal("flat3", coords(3), Expr::num(1.0)).unwrap();
        assert!(QSpec::Bach.validate(&chart).is_err());
        assert!(bach_tensor(&chart, &[0.0; 3]).is_err());
    }
}
