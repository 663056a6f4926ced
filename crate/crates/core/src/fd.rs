//! Jets from function values by central finite differences.
//!
//! Each partial `∂^α` is a tensor product of one-dimensional central
//! stencils. Two step sizes `h` and `h/2` are combined by Richardson
//! extrapolation, cancelling the leading `O(h²)` error term.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::jet::{Jet, Layout, MAX_ORDER};

/// Highest derivative order with a built-in stencil.
pub const MAX_FD_ORDER: usize = 5;

/// Central stencil for the `m`-th derivative at unit step: `(offset, weight)`.
fn stencil(m: usize) -> &'static [(i64, f64)] {
    match m {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        5 => &[(-3, -0.5), (-2, 2.0), (-1, -2.5), (1, 2.5), (2, -2.0), (3, 0.5)],
        _ => panic!("no stencil for derivative order {m}"),
    }
}

/// Base step for a partial of total degree `m`.
pub fn step(m: usize) -> f64 {
    f64::EPSILON.powf(1.0 / (m as f64 + 4.0))
}

/// Jets of order `order` for each component of a vector-valued function.
pub fn jets_from_values(
    point: &[f64],
    order: usize,
    components: usize,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<Jet>> {
    if order > MAX_FD_ORDER.min(MAX_ORDER) {
        return Err(Error::InvalidParam(format!(
            "finite-difference jets support order at most {MAX_FD_ORDER}, got {order}"
        )));
    }
    let n = point.len();
    let layout = Layout::get(n);
    let mut cache: HashMap<(usize, bool, Vec<i64>), Vec<f64>> = HashMap::new();
    let mut eval = |m: usize, half: bool, k: &[i64]| -> Result<Vec<f64>> {
        let key = (m, half, k.to_vec());
        if let Some(v) = cache.get(&key) {
            return Ok(v.clone());
        }
        let h = if half { step(m) / 2.0 } else { step(m) };
        let x: Vec<f64> = point.iter().zip(k).map(|(&p, &ki)| p + h * ki as f64).collect();
        let v = f(&x)?;
        if v.len() != components {
            return Err(Error::DimensionMismatch {
                expected: components,
                got: v.len(),
            });
        }
        cache.insert(key, v.clone());
        Ok(v)
    };

    let monomials = layout.monomials(order);
    let mut partials = vec![vec![0.0; monomials.len()]; components];
    for (mi, alpha) in monomials.iter().enumerate() {
        let m: usize = alpha.iter().map(|&a| a as usize).sum();
        let mut estimates = [vec![0.0; components], vec![0.0; components]];
        for (slot, half) in [false, true].into_iter().enumerate() {
            let h = if half { step(m) / 2.0 } else { step(m) };
            let stencils: Vec<&[(i64, f64)]> = alpha.iter().map(|&a| stencil(a as usize)).collect();
            let mut idx = vec![0usize; n];
            loop {
                let mut weight = 1.0;
                let mut k = vec![0i64; n];
                for v in 0..n {
                    let (off, w) = stencils[v][idx[v]];
                    k[v] = off;
                    weight *= w;
                }
                let vals = eval(m, half, &k)?;
                for c in 0..components {
                    estimates[slot][c] += weight * vals[c];
                }
                let mut v = 0;
                loop {
                    if v == n {
                        break;
                    }
                    idx[v] += 1;
                    if idx[v] < stencils[v].len() {
                        break;
                    }
                    idx[v] = 0;
                    v += 1;
                }
                if v == n {
                    break;
                }
            }
            let scale = h.powi(m as i32);
            for e in estimates[slot].iter_mut() {
                *e /= scale;
            }
        }
        for c in 0..components {
            partials[c][mi] = if m == 0 {
                estimates[0][c]
            } else {
                (4.0 * estimates[1][c] - estimates[0][c]) / 3.0
            };
        }
    }
    Ok(partials.iter().map(|p| Jet::from_partials(n, order, p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_polynomial_and_transcendental_partials() {
        let f = |x: &[f64]| Ok(vec![x[0].powi(3) * x[1], (x[0] * x[1]).sin()]);
        let jets = jets_from_values(&[0.4, -0.3], 4, 2, f).unwrap();
        assert!((jets[0].partial(&[2, 1]) - 6.0 * 0.4).abs() < 1e-6);
        assert!((jets[0].partial(&[3, 1]) - 6.0).abs() < 1e-5);
        assert!((jets[0].partial(&[1, 0]) - 3.0 * 0.16 * -0.3).abs() < 1e-9);
        let x = Jet::variable(2, 4, 0, 0.4);
        let y = Jet::variable(2, 4, 1, -0.3);
        let exact = (&x * &y).sin();
        for (a, b) in jets[1].coeffs().iter().zip(exact.coeffs()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn fifth_order_stencil() {
        let f = |x: &[f64]| Ok(vec![x[0].exp()]);
        let jets = jets_from_values(&[0.2], 5, 1, f).unwrap();
        assert!((jets[0].partial(&[5]) - 0.2f64.exp()).abs() < 1e-3);
    }
}
