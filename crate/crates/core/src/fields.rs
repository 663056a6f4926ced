//! Scalar and symmetric (0,2) tensor fields on a chart.

use std::fmt;
use std::sync::Arc;

use crate::chart::{upper_index, Chart};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fd;
use crate::geometry::LocalGeometry;
use crate::jet::Jet;
use crate::tensor::Tensor;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// A smooth function in chart coordinates.
#[derive(Clone)]
pub enum ScalarField {
    /// Closed form; jets are exact.
    Expr(Expr),
    /// Pointwise values; jets come from finite differences.
    Function(ScalarFn),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Expr(e) => f.debug_tuple("Expr").field(e).finish(),
            ScalarField::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl From<Expr> for ScalarField {
    fn from(e: Expr) -> Self {
        ScalarField::Expr(e)
    }
}

impl ScalarField {
    pub fn function(f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        ScalarField::Function(Arc::new(f))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScalarField::Expr(_))
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        match self {
            ScalarField::Expr(e) => e.eval_f64(p),
            ScalarField::Function(f) => f(p),
        }
    }

    pub fn jet(&self, p: &[f64], order: usize) -> Result<Jet> {
        let n = p.len();
        match self {
            ScalarField::Expr(e) => {
                let vars: Vec<Jet> = (0..n).map(|i| Jet::variable(n, order, i, p[i])).collect();
                e.eval(&vars)
            }
            ScalarField::Function(f) => {
                let mut jets = fd::jets_from_values(p, order, 1, |x| Ok(vec![f(x)?]))?;
                Ok(jets.remove(0))
            }
        }
    }
}

pub type TensorFn = Arc<dyn Fn(&LocalGeometry, usize) -> Result<Tensor<Jet>> + Send + Sync>;

/// A symmetric (0,2) tensor field.
#[derive(Clone)]
pub enum TensorField {
    /// Upper-triangle component expressions in chart coordinates.
    Components(Vec<Expr>),
    /// Built from local geometry; needs metric jets of order
    /// `order + extra_metric_order` to produce jets of order `order`.
    Geometric { build: TensorFn, extra_metric_order: usize },
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorField::Components(c) => f.debug_tuple("Components").field(c).finish(),
            TensorField::Geometric { extra_metric_order, .. } => write!(f, "Geometric(+{extra_metric_order})"),
        }
    }
}

impl TensorField {
    pub fn components(upper: Vec<Expr>) -> Self {
        TensorField::Components(upper)
    }

    /// Metric jet order needed for tensor jets of the given order.
    pub fn metric_order(&self, order: usize) -> usize {
        match self {
            TensorField::Components(_) => 0,
            TensorField::Geometric { extra_metric_order, .. } => order + extra_metric_order,
        }
    }

    pub fn jets(&self, chart: &Chart, geo: &LocalGeometry, order: usize) -> Result<Tensor<Jet>> {
        let n = chart.dim();
        match self {
            TensorField::Components(c) => {
                if c.len() != n * (n + 1) / 2 {
                    return Err(Error::DimensionMismatch {
                        expected: n * (n + 1) / 2,
                        got: c.len(),
                    });
                }
                let p = geo.point();
                let vars: Vec<Jet> = (0..n).map(|i| Jet::variable(n, order, i, p[i])).collect();
                let jets = c.iter().map(|e| e.eval(&vars)).collect::<Result<Vec<_>>>()?;
                Ok(Tensor::from_fn(n, 2, |idx| {
                    jets[upper_index(n, idx[0], idx[1])].clone()
                }))
            }
            TensorField::Geometric { build, .. } => build(geo, order),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_field_jets_follow_finite_differences() {
        let f = ScalarField::function(|x| Ok(x[0] * x[0] * x[1]));
        let j = f.jet(&[1.0, 2.0], 2).unwrap();
        assert!((j.partial(&[1, 1]) - 2.0).abs() < 1e-7);
        assert!((j.partial(&[2, 0]) - 4.0).abs() < 1e-7);
        assert!(!f.is_exact());
    }
}
