//! Truncated multivariate Taylor polynomials.
//!
//! A [`Jet`] of order `k` at a point `p` stores the Taylor coefficients
//! `c_α = ∂^α u(p) / α!` for every multi-index `|α| ≤ k`. Arithmetic on jets
//! is exact up to truncation, so composing closed-form expressions yields
//! exact partial derivatives. Differentiating a jet lowers its order by one,
//! and binary operations truncate to the smaller order of their operands.
//!
//! Monomials are stored in graded order (all degree-0, then degree-1, ...),
//! so the coefficient vector of an order-`k` jet is a prefix of the vector
//! of any higher-order jet at the same point.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// Highest jet order supported by the monomial tables.
pub const MAX_ORDER: usize = 7;

/// Monomial bookkeeping for jets in a fixed number of variables.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    monomials: Vec<Vec<u8>>,
    len_by_order: Vec<usize>,
    /// `(i, j, k)` with `mono[i] + mono[j] = mono[k]`, sorted by `k`.
    products: Vec<(u32, u32, u32)>,
    prod_end: Vec<usize>,
    /// For each variable, `deriv[var][dst] = (src, factor)`.
    deriv: Vec<Vec<(u32, f64)>>,
    factorial: Vec<f64>,
}

impl Layout {
    /// Shared layout for `nvars` variables, built on first use.
    pub fn get(nvars: usize) -> &'static Layout {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static Layout>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("layout cache poisoned");
        guard
            .entry(nvars)
            .or_insert_with(|| Box::leak(Box::new(Layout::build(nvars))))
    }

    fn build(nvars: usize) -> Layout {
        let mut monomials: Vec<Vec<u8>> = Vec::new();
        let mut len_by_order = Vec::with_capacity(MAX_ORDER + 1);
        for degree in 0..=MAX_ORDER {
            let mut current = vec![0u8; nvars];
            push_degree(&mut monomials, &mut current, 0, degree);
            len_by_order.push(monomials.len());
        }
        let index: HashMap<Vec<u8>, usize> = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let degree = |m: &[u8]| m.iter().map(|&a| a as usize).sum::<usize>();

        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            let da = degree(a);
            for (j, b) in monomials.iter().enumerate() {
                if da + degree(b) > MAX_ORDER {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        products.sort_by_key(|&(i, j, k)| (k, i, j));
        let prod_end = len_by_order
            .iter()
            .map(|&len| products.partition_point(|&(_, _, k)| (k as usize) < len))
            .collect();

        let lower_len = len_by_order[MAX_ORDER - 1];
        let deriv = (0..nvars)
            .map(|var| {
                (0..lower_len)
                    .map(|dst| {
                        let mut m = monomials[dst].clone();
                        m[var] += 1;
                        (index[&m] as u32, m[var] as f64)
                    })
                    .collect()
            })
            .collect();

        let factorial = monomials
            .iter()
            .map(|m| m.iter().map(|&a| factorial(a as usize)).product())
            .collect();

        Layout {
            nvars,
            monomials,
            len_by_order,
            products,
            prod_end,
            deriv,
            factorial,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.len_by_order[order]
    }

    pub fn monomials(&self, order: usize) -> &[Vec<u8>] {
        &self.monomials[..self.len(order)]
    }

    fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > MAX_ORDER {
            return None;
        }
        let start = if deg == 0 { 0 } else { self.len_by_order[deg - 1] };
        let end = self.len_by_order[deg];
        (start..end).find(|&i| self.monomials[i] == alpha)
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, current: &mut [u8], var: usize, remaining: usize) {
    if current.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if var + 1 == current.len() {
        current[var] = remaining as u8;
        out.push(current.to_vec());
        current[var] = 0;
        return;
    }
    for a in (0..=remaining).rev() {
        current[var] = a as u8;
        push_degree(out, current, var + 1, remaining - a);
    }
    current[var] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Truncated Taylor expansion of a scalar quantity about a point.
#[derive(Clone, Debug)]
pub struct Jet {
    layout: &'static Layout,
    order: usize,
    coeffs: Vec<f64>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.layout.nvars == other.layout.nvars && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let layout = Layout::get(nvars);
        let mut coeffs = vec![0.0; layout.len(order)];
        coeffs[0] = value;
        Jet { layout, order, coeffs }
    }

    /// The coordinate function `x_var` expanded about a point whose
    /// `var`-th coordinate is `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        let mut jet = Jet::constant(nvars, order, value);
        if order >= 1 {
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }

    /// Builds a jet from partial derivatives `∂^α u` listed in the layout's
    /// monomial order.
    pub fn from_partials(nvars: usize, order: usize, partials: &[f64]) -> Jet {
        let layout = Layout::get(nvars);
        assert_eq!(partials.len(), layout.len(order));
        let coeffs = partials
            .iter()
            .zip(&layout.factorial)
            .map(|(d, fact)| d / fact)
            .collect();
        Jet { layout, order, coeffs }
    }

    /// A constant with the same shape as `self`.
    pub fn lift(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            layout: self.layout,
            order: self.order,
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Jet {
        self.lift(0.0)
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The partial derivative `∂^α u` at the expansion point.
    pub fn partial(&self, alpha: &[u8]) -> f64 {
        assert_eq!(alpha.len(), self.layout.nvars);
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        assert!(
            deg <= self.order,
            "partial of degree {deg} from order-{} jet",
            self.order
        );
        let i = self.layout.index_of(alpha).expect("multi-index in layout");
        self.coeffs[i] * self.layout.factorial[i]
    }

    /// First partial `∂_var u` at the expansion point.
    pub fn d1(&self, var: usize) -> f64 {
        self.coeffs[1 + var]
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            layout: self.layout,
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    /// Partial derivative `∂_var` as a jet of one lower order.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let len = self.layout.len(order);
        let table = &self.layout.deriv[var][..len];
        let coeffs = table
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Jet {
            layout: self.layout,
            order,
            coeffs,
        }
    }

    fn check_compatible(&self, other: &Jet) {
        debug_assert_eq!(
            self.layout.nvars, other.layout.nvars,
            "jets over different variable counts"
        );
    }

    fn combine(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let len = self.layout.len(order);
        let coeffs = self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(&a, &b)| op(a, b))
            .collect();
        Jet {
            layout: self.layout,
            order,
            coeffs,
        }
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let len = self.layout.len(order);
        let mut coeffs = vec![0.0; len];
        let a = &self.coeffs;
        let b = &other.coeffs;
        for &(i, j, k) in &self.layout.products[..self.layout.prod_end[order]] {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            layout: self.layout,
            order,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Accumulates `a * b` into `self` (truncating to the smallest order).
    pub fn fma_assign(&mut self, a: &Jet, b: &Jet) {
        let prod = a.mul_jet(b);
        *self = &*self + &prod;
    }

    /// Evaluates `Σ_k series[k] (u − u₀)^k`, i.e. composes a univariate
    /// function given by its Taylor coefficients at `u₀` with this jet.
    pub fn compose(&self, series: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let top = self.order.min(series.len() - 1);
        let mut acc = self.lift(series[top]);
        for k in (0..top).rev() {
            acc = acc.mul_jet(&delta);
            acc.coeffs[0] += series[k];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let series: Vec<f64> = (0..=self.order).map(|k| e / factorial(k)).collect();
        self.compose(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(Error::Eval(format!("log of non-positive value {u0}")));
        }
        let mut series = vec![u0.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (k as f64 * u0.powi(k as i32)));
        }
        Ok(self.compose(&series))
    }

    fn trig_series(&self, phase: f64, hyperbolic: bool) -> Vec<f64> {
        let u0 = self.value();
        (0..=self.order)
            .map(|k| {
                let d = if hyperbolic {
                    // phase 0: sinh, phase 1: cosh
                    if ((k as f64 + phase) as usize).is_multiple_of(2) {
                        u0.sinh()
                    } else {
                        u0.cosh()
                    }
                } else {
                    (u0 + (k as f64 + phase) * std::f64::consts::FRAC_PI_2).sin()
                };
                d / factorial(k)
            })
            .collect()
    }

    pub fn sin(&self) -> Jet {
        self.compose(&self.trig_series(0.0, false))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&self.trig_series(1.0, false))
    }

    pub fn sinh(&self) -> Jet {
        self.compose(&self.trig_series(0.0, true))
    }

    pub fn cosh(&self) -> Jet {
        self.compose(&self.trig_series(1.0, true))
    }

    /// Real power with constant exponent; needs a positive base unless the
    /// exponent is an integer.
    pub fn powf(&self, exponent: f64) -> Result<Jet> {
        if exponent.fract() == 0.0 && exponent.abs() < 64.0 {
            return self.powi(exponent as i32);
        }
        let u0 = self.value();
        if u0 <= 0.0 {
            return Err(Error::Eval(format!(
                "non-integer power {exponent} of non-positive value {u0}"
            )));
        }
        let mut series = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            series.push(binom * u0.powf(exponent - k as f64));
            binom *= (exponent - k as f64) / (k as f64 + 1.0);
        }
        Ok(self.compose(&series))
    }

    pub fn powi(&self, exponent: i32) -> Result<Jet> {
        if exponent < 0 {
            return self.recip()?.powi(-exponent);
        }
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = exponent as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    pub fn recip(&self) -> Result<Jet> {
        let u0 = self.value();
        if u0 == 0.0 || !u0.is_finite() {
            return Err(Error::Eval(format!("reciprocal of {u0}")));
        }
        let series: Vec<f64> = (0..=self.order)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign / u0.powi(k as i32 + 1)
            })
            .collect();
        Ok(self.compose(&series))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    pub fn div_jet(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }
}

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Div<f64> for &Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum(terms: impl IntoIterator<Item = Jet>) -> Option<Jet> {
    terms.into_iter().reduce(|a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy(order: usize, p: [f64; 2]) -> (Jet, Jet) {
        (Jet::variable(2, order, 0, p[0]), Jet::variable(2, order, 1, p[1]))
    }

    #[test]
    fn monomial_counts_match_binomials() {
        let layout = Layout::get(4);
        // C(n + k, k)
        assert_eq!(layout.len(0), 1);
        assert_eq!(layout.len(2), 15);
        assert_eq!(layout.len(4), 70);
        let layout = Layout::get(1);
        assert_eq!(layout.len(MAX_ORDER), MAX_ORDER + 1);
    }

    #[test]
    fn product_of_polynomials() {
        let (x, y) = xy(4, [0.5, -1.5]);
        // u = x^2 y at (0.5, -1.5)
        let u = &(&x * &x) * &y;
        assert!((u.value() - 0.25 * -1.5).abs() < 1e-15);
        assert!((u.partial(&[1, 0]) - 2.0 * 0.5 * -1.5).abs() < 1e-15);
        assert!((u.partial(&[2, 1]) - 2.0).abs() < 1e-15);
        assert!((u.partial(&[1, 1]) - 1.0).abs() < 1e-15);
        assert_eq!(u.partial(&[3, 1]), 0.0);
    }

    #[test]
    fn transcendental_derivatives() {
        let (x, y) = xy(4, [0.3, 0.7]);
        let u = (&x * &y).exp();
        // d^4/dx^4 exp(xy) = y^4 exp(xy)
        let e = (0.3f64 * 0.7).exp();
        assert!((u.partial(&[4, 0]) - 0.7f64.powi(4) * e).abs() < 1e-12);
        let s = x.sin();
        assert!((s.partial(&[3, 0]) + 0.3f64.cos()).abs() < 1e-14);
        let c = y.cosh();
        assert!((c.partial(&[0, 3]) - 0.7f64.sinh()).abs() < 1e-14);
        let l = y.ln().unwrap();
        assert!((l.partial(&[0, 2]) + 1.0 / 0.49).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_and_powers() {
        let (x, y) = xy(4, [1.2, 0.4]);
        let r = (&(&x * &x) + &(&y * &y)).add_scalar(1.0);
        let inv = r.recip().unwrap();
        let one = &inv * &r;
        assert!((one.value() - 1.0).abs() < 1e-15);
        for c in &one.coeffs()[1..] {
            assert!(c.abs() < 1e-13);
        }
        let half = r.powf(0.5).unwrap();
        let back = &half * &half;
        for (a, b) in back.coeffs().iter().zip(r.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(x.lift(-1.0).powf(0.5).is_err());
        assert!(x.lift(-2.0).powf(3.0).is_ok());
    }

    #[test]
    fn derivative_lowers_order() {
        let (x, y) = xy(3, [2.0, 1.0]);
        let u = &(&x * &x) * &(&y * &y);
        let ux = u.derivative(0);
        assert_eq!(ux.order(), 2);
        // ∂x(x²y²) = 2xy², ∂y of that = 4xy
        assert!((ux.value() - 4.0).abs() < 1e-15);
        assert!((ux.partial(&[0, 1]) - 8.0).abs() < 1e-15);
        assert!((ux.partial(&[1, 1]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_order_operations_truncate() {
        let a = Jet::variable(2, 4, 0, 1.0);
        let b = Jet::variable(2, 2, 1, 1.0);
        assert_eq!((&a + &b).order(), 2);
        assert_eq!((&a * &b).order(), 2);
    }
}
