//! Small dense helpers relative to a metric.

use nalgebra::{DMatrix, DVector};

use crate::tensor::Tensor;

/// Columns form a g-orthonormal basis: `Eᵀ g E = I`.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = g.clone().cholesky()?.l();
    let n = g.nrows();
    // L Lᵀ = g, so E = L⁻ᵀ.
    l.transpose().solve_upper_triangular(&DMatrix::identity(n, n))
}

/// Eigenvalues of the (1,1) form `g⁻¹T` in ascending order.
pub fn relative_eigenvalues(g: &DMatrix<f64>, t: &Tensor<f64>) -> Option<Vec<f64>> {
    let e = orthonormal_frame(g)?;
    let a = e.transpose() * t.to_matrix() * &e;
    let sym = (&a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Some(ev)
}

/// `T(v, w)` for a (0,2) tensor.
pub fn bilinear(t: &Tensor<f64>, v: &[f64], w: &[f64]) -> f64 {
    let n = t.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += t.at2(i, j) * v[i] * w[j];
        }
    }
    acc
}

pub fn metric_norm(g: &DMatrix<f64>, v: &[f64]) -> f64 {
    let v = DVector::from_column_slice(v);
    (v.transpose() * g * &v)[(0, 0)].max(0.0).sqrt()
}

/// Gram–Schmidt in the g inner product starting from `first`, completed
/// with coordinate vectors.
pub fn frame_from(g: &DMatrix<f64>, first: &[f64]) -> Option<Vec<Vec<f64>>> {
    let n = g.nrows();
    let inner = |a: &[f64], b: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[(i, j)] * a[i] * b[j];
            }
        }
        s
    };
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
    let candidates = std::iter::once(first.to_vec()).chain((0..n).map(|k| {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        e
    }));
    for mut v in candidates {
        if frame.len() == n {
            break;
        }
        for _ in 0..2 {
            for u in &frame {
                let c = inner(&v, u);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
        }
        let norm = inner(&v, &v).max(0.0).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            frame.push(v);
        }
    }
    (frame.len() == n).then_some(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 4.0]);
        let e = orthonormal_frame(&g).unwrap();
        assert!((e.transpose() * &g * &e - DMatrix::identity(3, 3)).amax() < 1e-12);
        let f = frame_from(&g, &[1.0, 1.0, 0.0]).unwrap();
        for (i, a) in f.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                let d = DVector::from_column_slice(a).transpose() * &g * DVector::from_column_slice(b);
                assert!((d[(0, 0)] - f64::from(i == j)).abs() < 1e-12);
            }
        }
        let t = Tensor::from_matrix(&(&g * 3.0));
        let ev = relative_eigenvalues(&g, &t).unwrap();
        assert!(ev.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }
}
