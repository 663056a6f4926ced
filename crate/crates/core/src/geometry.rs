//! Levi-Civita connection and curvature from metric jets.
//!
//! Conventions: `Γ^k_ij` is stored at `[k, i, j]`; the Riemann tensor
//! `R^l_ijk` at `[l, i, j, k]` with
//! `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l = (∇_i∇_j − ∇_j∇_i)∂_k`;
//! `Ric_jk = R^i_ijk`, positive on round spheres. Covariant derivatives put
//! the new index first: `(∇T)[a, b…] = ∇_a T_b…`.

use serde::Serialize;

use crate::chart::{Chart, JetRegime};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, TensorField};
use crate::jet::Jet;
use crate::tensor::Tensor;

/// Metric, connection and curvature jets at one point.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    point: Vec<f64>,
    order: usize,
    regime: JetRegime,
    g: Tensor<Jet>,
    ginv: Tensor<Jet>,
    gamma: Option<Tensor<Jet>>,
    riemann: Option<Tensor<Jet>>,
    ricci: Option<Tensor<Jet>>,
    scalar: Option<Jet>,
}

fn sum_jets(mut terms: impl Iterator<Item = Jet>) -> Jet {
    let first = terms.next().expect("non-empty sum");
    terms.fold(first, |a, b| a + b)
}

impl LocalGeometry {
    /// Builds geometry from metric jets of the given order. Connection
    /// jets have order `order − 1` and curvature jets `order − 2`.
    pub fn new(chart: &Chart, p: &[f64], order: usize) -> Result<LocalGeometry> {
        let m = chart.metric_jet(p, order)?;
        let n = chart.dim();
        let (g, ginv) = (m.g, m.ginv);

        let gamma = (order >= 1).then(|| {
            let dg: Vec<Tensor<Jet>> = (0..n).map(|a| g.map(|x| x.derivative(a))).collect();
            let ginv_t = ginv.truncate(order - 1);
            // Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
            let lower = Tensor::from_fn(n, 3, |idx| {
                let (l, i, j) = (idx[0], idx[1], idx[2]);
                (dg[i].at2(j, l) + dg[j].at2(i, l) - dg[l].at2(i, j)) * 0.5
            });
            Tensor::from_fn(n, 3, |idx| {
                let (k, i, j) = (idx[0], idx[1], idx[2]);
                sum_jets((0..n).map(|l| ginv_t.at2(k, l) * lower.at3(l, i, j)))
            })
        });

        let riemann = (order >= 2).then(|| {
            let gm = gamma.as_ref().expect("connection");
            let dgamma: Vec<Tensor<Jet>> = (0..n).map(|a| gm.map(|x| x.derivative(a))).collect();
            let gt = gm.truncate(order - 2);
            Tensor::from_fn(n, 4, |idx| {
                let (l, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
                let mut acc = dgamma[i].at3(l, j, k) - dgamma[j].at3(l, i, k);
                for mm in 0..n {
                    acc = acc + gt.at3(l, i, mm) * gt.at3(mm, j, k) - gt.at3(l, j, mm) * gt.at3(mm, i, k);
                }
                acc
            })
        });

        let ricci = riemann.as_ref().map(|rm| {
            Tensor::from_fn(n, 2, |idx| {
                sum_jets((0..n).map(|i| rm.at4(i, i, idx[0], idx[1]).clone()))
            })
        });
        let scalar = ricci.as_ref().map(|ric| {
            let gi = ginv.truncate(order - 2);
            sum_jets((0..n * n).map(|ij| gi.at(ij) * ric.at(ij)))
        });

        Ok(LocalGeometry {
            point: p.to_vec(),
            order,
            regime: m.regime,
            g,
            ginv,
            gamma,
            riemann,
            ricci,
            scalar,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn regime(&self) -> JetRegime {
        self.regime
    }

    pub fn g(&self) -> &Tensor<Jet> {
        &self.g
    }

    pub fn ginv(&self) -> &Tensor<Jet> {
        &self.ginv
    }

    pub fn gamma(&self) -> &Tensor<Jet> {
        self.gamma.as_ref().expect("connection needs metric order >= 1")
    }

    pub fn riemann(&self) -> &Tensor<Jet> {
        self.riemann.as_ref().expect("curvature needs metric order >= 2")
    }

    pub fn ricci(&self) -> &Tensor<Jet> {
        self.ricci.as_ref().expect("curvature needs metric order >= 2")
    }

    pub fn scalar(&self) -> &Jet {
        self.scalar.as_ref().expect("curvature needs metric order >= 2")
    }

    /// Fully covariant curvature `Rm_abcd = ⟨R(∂_c, ∂_d)∂_b, ∂_a⟩`.
    pub fn riemann_lowered(&self) -> Tensor<Jet> {
        let n = self.dim();
        let rm = self.riemann();
        let g = self.g.truncate(rm.order());
        Tensor::from_fn(n, 4, |idx| {
            let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
            sum_jets((0..n).map(|m| g.at2(a, m) * rm.at4(m, c, d, b)))
        })
    }

    /// Weyl tensor in the index convention of [`Self::riemann_lowered`].
    pub fn weyl(&self) -> Result<Tensor<Jet>> {
        let n = self.dim();
        if n < 3 {
            return Err(Error::InvalidParam("Weyl tensor needs dimension >= 3".into()));
        }
        let rm = self.riemann_lowered();
        let ord = rm.order();
        let g = self.g.truncate(ord);
        let ric = self.ricci();
        let r = self.scalar();
        let nf = n as f64;
        Ok(Tensor::from_fn(n, 4, |idx| {
            let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
            let kn = g.at2(a, c) * ric.at2(b, d) - g.at2(a, d) * ric.at2(b, c) + g.at2(b, d) * ric.at2(a, c)
                - g.at2(b, c) * ric.at2(a, d);
            let gg = g.at2(a, c) * g.at2(b, d) - g.at2(a, d) * g.at2(b, c);
            rm.at4(a, b, c, d) - &(kn * (1.0 / (nf - 2.0))) + gg * r * (1.0 / ((nf - 1.0) * (nf - 2.0)))
        }))
    }

    /// `∇T` for a covariant tensor `T`; the result has rank `rank(T) + 1`.
    pub fn covariant_derivative(&self, t: &Tensor<Jet>) -> Tensor<Jet> {
        let n = self.dim();
        let rank = t.rank();
        let ord = t.order().saturating_sub(1).min(self.order.saturating_sub(1));
        let gm = self.gamma().truncate(ord);
        let mut tmp = vec![0usize; rank];
        Tensor::from_fn(n, rank + 1, |idx| {
            let a = idx[0];
            let b = &idx[1..];
            let mut acc = t.get(b).derivative(a);
            for s in 0..rank {
                tmp.copy_from_slice(b);
                for m in 0..n {
                    tmp[s] = m;
                    acc = acc - gm.at3(m, a, b[s]) * t.get(&tmp);
                }
            }
            acc
        })
    }

    /// Covariant Hessian `∇_i∇_j u`.
    pub fn hessian(&self, u: &Jet) -> Tensor<Jet> {
        let n = self.dim();
        let du: Vec<Jet> = (0..n).map(|i| u.derivative(i)).collect();
        let ord = u.order().saturating_sub(2).min(self.order.saturating_sub(1));
        let gm = self.gamma().truncate(ord);
        Tensor::from_fn(n, 2, |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut acc = du[i].derivative(j);
            for k in 0..n {
                acc = acc - gm.at3(k, i, j) * &du[k];
            }
            acc
        })
    }

    pub fn differential(&self, u: &Jet) -> Vec<Jet> {
        (0..self.dim()).map(|i| u.derivative(i)).collect()
    }

    /// `v^i = g^{ij} w_j`.
    pub fn raise(&self, w: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        (0..n)
            .map(|i| sum_jets((0..n).map(|j| self.ginv.at2(i, j) * &w[j])))
            .collect()
    }

    /// `g^{ij} T_ij`.
    pub fn trace(&self, t: &Tensor<Jet>) -> Jet {
        let n = self.dim();
        sum_jets((0..n * n).map(|ij| self.ginv.at(ij) * t.at(ij)))
    }

    /// `g^{ik} g^{jl} A_ij B_kl`.
    pub fn inner2(&self, a: &Tensor<Jet>, b: &Tensor<Jet>) -> Jet {
        let n = self.dim();
        let ord = a.order().min(b.order());
        let gi = self.ginv.truncate(ord);
        // raise both indices of A, then contract with B
        let a_up = Tensor::from_fn(n, 2, |idx| {
            sum_jets((0..n).flat_map(|i| {
                let gi = &gi;
                (0..n).map(move |j| gi.at2(idx[0], i) * gi.at2(idx[1], j) * a.at2(i, j))
            }))
        });
        sum_jets((0..n * n).map(|ij| a_up.at(ij) * b.at(ij)))
    }

    /// `g(v, w)` for vectors.
    pub fn inner_vec(&self, v: &[Jet], w: &[Jet]) -> Jet {
        let n = self.dim();
        sum_jets((0..n * n).map(|ij| self.g.at(ij) * &v[ij / n] * &w[ij % n]))
    }

    /// `g^{ij} a_i b_j` for covectors.
    pub fn inner_covec(&self, a: &[Jet], b: &[Jet]) -> Jet {
        let n = self.dim();
        sum_jets((0..n * n).map(|ij| self.ginv.at(ij) * &a[ij / n] * &b[ij % n]))
    }

    /// `(div T)_j = g^{ik} ∇_i T_kj`.
    pub fn divergence(&self, t: &Tensor<Jet>) -> Vec<Jet> {
        let n = self.dim();
        let dt = self.covariant_derivative(t);
        let gi = self.ginv.truncate(dt.order());
        (0..n)
            .map(|j| sum_jets((0..n * n).map(|ik| gi.at(ik) * dt.at3(ik / n, ik % n, j))))
            .collect()
    }

    pub fn laplacian(&self, u: &Jet) -> Jet {
        self.trace(&self.hessian(u))
    }

    /// `R(X, Y)Z` at the base point for value vectors.
    pub fn curvature_operator(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let rm = self.riemann();
        (0..n)
            .map(|l| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            acc += x[i] * y[j] * z[k] * rm.at4(l, i, j, k).value();
                        }
                    }
                }
                acc
            })
            .collect()
    }

    pub fn bundle(&self) -> CurvatureBundle {
        CurvatureBundle {
            christoffel: self.gamma().values(),
            riemann: self.riemann().values(),
            ricci: self.ricci().values(),
            scalar: self.scalar().value(),
        }
    }
}

/// Curvature values at a point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBundle {
    #[serde(skip)]
    pub christoffel: Tensor<f64>,
    #[serde(skip)]
    pub riemann: Tensor<f64>,
    #[serde(skip)]
    pub ricci: Tensor<f64>,
    pub scalar: f64,
}

pub fn curvature_at(chart: &Chart, p: &[f64]) -> Result<CurvatureBundle> {
    Ok(LocalGeometry::new(chart, p, 2)?.bundle())
}

/// Christoffel symbols `Γ^k_ij` from first metric derivatives, without
/// building connection jets.
pub fn christoffel_values(chart: &Chart, p: &[f64]) -> Result<Tensor<f64>> {
    let m = chart.metric_jet(p, 1)?;
    let n = chart.dim();
    let lower = Tensor::from_fn(n, 3, |idx| {
        let (l, i, j) = (idx[0], idx[1], idx[2]);
        0.5 * (m.g.at2(j, l).d1(i) + m.g.at2(i, l).d1(j) - m.g.at2(i, j).d1(l))
    });
    Ok(Tensor::from_fn(n, 3, |idx| {
        (0..n)
            .map(|l| m.ginv.at2(idx[0], l).value() * lower.at3(l, idx[1], idx[2]))
            .sum()
    }))
}

pub fn hessian(chart: &Chart, f: &ScalarField, p: &[f64]) -> Result<Tensor<f64>> {
    let geo = LocalGeometry::new(chart, p, 1)?;
    Ok(geo.hessian(&f.jet(p, 2)?).values())
}

pub fn divergence_02(chart: &Chart, t: &TensorField, p: &[f64]) -> Result<Vec<f64>> {
    let geo = LocalGeometry::new(chart, p, 1.max(t.metric_order(1)))?;
    let tj = t.jets(chart, &geo, 1)?;
    Ok(geo.divergence(&tj).iter().map(Jet::value).collect())
}

pub fn laplacian(chart: &Chart, u: &ScalarField, p: &[f64]) -> Result<f64> {
    let geo = LocalGeometry::new(chart, p, 1)?;
    Ok(geo.laplacian(&u.jet(p, 2)?).value())
}

/// `Δ_f u = Δu − ⟨∇f, ∇u⟩`.
pub fn f_laplacian(chart: &Chart, u: &ScalarField, f: &ScalarField, p: &[f64]) -> Result<f64> {
    let geo = LocalGeometry::new(chart, p, 1)?;
    let uj = u.jet(p, 2)?;
    let fj = f.jet(p, 1)?;
    let grad_term = geo.inner_covec(&geo.differential(&fj), &geo.differential(&uj));
    Ok(geo.laplacian(&uj).value() - grad_term.value())
}

/// `R(X, ∇f)∇f`.
pub fn radial_curvature(chart: &Chart, f: &ScalarField, p: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let geo = LocalGeometry::new(chart, p, 2)?;
    let fj = f.jet(p, 1)?;
    let grad: Vec<f64> = geo.raise(&geo.differential(&fj)).iter().map(Jet::value).collect();
    Ok(geo.curvature_operator(x, &grad, &grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn coords(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{}", i + 1)).collect()
    }

    /// Stereographic sphere of radius `a`: sectional curvature 1/a².
    fn sphere(n: usize, a: f64) -> Chart {
        let r2 = Expr::sum_of_squares(0..n);
        let factor = Expr::num(4.0 * a * a) / (Expr::num(1.0) + r2).powf(2.0);
        Chart::conformal("sphere", coords(n), factor).unwrap()
    }

    #[test]
    fn round_sphere_curvature() {
        let a = 2.0f64.sqrt();
        let chart = sphere(3, a);
        let p = [0.3, -0.4, 0.1];
        let geo = LocalGeometry::new(&chart, &p, 2).unwrap();
        let g = geo.g().values();
        let ric = geo.ricci().values();
        // Ric = (n−1)/a² g
        for ij in 0..9 {
            assert!((ric.at(ij) - 2.0 / (a * a) * g.at(ij)).abs() < 1e-12);
        }
        assert!((geo.scalar().value() - 6.0 / (a * a)).abs() < 1e-12);
        // space form: R(X,Y)Z = K(⟨Y,Z⟩X − ⟨X,Z⟩Y)
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.5];
        let rz = geo.curvature_operator(&x, &y, &y);
        let yy = g.at2(1, 1) + 0.25 * g.at2(2, 2);
        let xy = 0.0;
        for l in 0..3 {
            let expected = (yy * x[l] - xy * y[l]) / (a * a);
            assert!((rz[l] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_christoffels_match_connection_jets() {
        let chart = sphere(3, 1.7);
        let p = [0.2, -0.5, 0.9];
        let direct = christoffel_values(&chart, &p).unwrap();
        let jets = LocalGeometry::new(&chart, &p, 1).unwrap().gamma().values();
        assert!(direct.max_abs_diff(&jets) < 1e-14);
    }

    #[test]
    fn weyl_vanishes_on_conformally_flat_metric() {
        let chart = sphere(4, 1.3);
        let geo = LocalGeometry::new(&chart, &[0.1, 0.2, -0.3, 0.4], 2).unwrap();
        let w = geo.weyl().unwrap().values();
        assert!(w.max_abs() < 1e-12);
    }

    #[test]
    fn hessian_of_flat_quadratic() {
        let chart = Chart::conformal("flat", coords(2), Expr::num(1.0)).unwrap();
        let f = ScalarField::from(Expr::parse("x1^2 + 3*x1*x2", chart.coords()).unwrap());
        let h = hessian(&chart, &f, &[0.5, 0.5]).unwrap();
        assert_eq!(*h.at2(0, 0), 2.0);
        assert_eq!(*h.at2(0, 1), 3.0);
        assert_eq!(*h.at2(1, 1), 0.0);
        assert_eq!(laplacian(&chart, &f, &[0.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn divergence_of_scaled_metric_is_gradient() {
        // div(u g) = du
        let chart = sphere(2, 1.0);
        let n = 2;
        let u = Expr::parse("x1^2 - x2", chart.coords()).unwrap();
        let factor = Expr::num(4.0) / (Expr::num(1.0) + Expr::sum_of_squares(0..n)).powf(2.0);
        let comps = vec![u.clone() * factor.clone(), Expr::num(0.0), u * factor];
        let t = TensorField::components(comps);
        let p = [0.3, 0.6];
        let div = divergence_02(&chart, &t, &p).unwrap();
        assert!((div[0] - 0.6).abs() < 1e-12);
        assert!((div[1] + 1.0).abs() < 1e-12);
    }
}
