//! Dense component arrays in a fixed dimension.

use crate::jet::Jet;

/// Components `T[i₁…i_r]` with each index in `0..n`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    n: usize,
    rank: usize,
    data: Vec<T>,
}

impl<T> Tensor<T> {
    pub fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len = n.pow(rank as u32);
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; rank];
        for _ in 0..len {
            data.push(f(&idx));
            for slot in (0..rank).rev() {
                idx[slot] += 1;
                if idx[slot] < n {
                    break;
                }
                idx[slot] = 0;
            }
        }
        Tensor { n, rank, data }
    }

    pub fn try_from_fn<E>(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Result<T, E>) -> Result<Self, E> {
        let mut err = None;
        let t = Tensor::from_fn(n, rank, |idx| match f(idx) {
            Ok(v) => Some(v),
            Err(e) => {
                err.get_or_insert(e);
                None
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(Tensor {
            n,
            rank,
            data: t.data.into_iter().map(|v| v.expect("checked above")).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut T {
        let o = self.offset(idx);
        &mut self.data[o]
    }

    pub fn at(&self, i: usize) -> &T {
        &self.data[i]
    }

    pub fn at2(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn at3(&self, i: usize, j: usize, k: usize) -> &T {
        &self.data[(i * self.n + j) * self.n + k]
    }

    pub fn at4(&self, i: usize, j: usize, k: usize, l: usize) -> &T {
        &self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl Tensor<Jet> {
    pub fn values(&self) -> Tensor<f64> {
        self.map(Jet::value)
    }

    pub fn truncate(&self, order: usize) -> Tensor<Jet> {
        self.map(|j| j.truncate(order))
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(Jet::order).min().unwrap_or(0)
    }
}

impl Tensor<f64> {
    pub fn zeros(n: usize, rank: usize) -> Self {
        Tensor::from_fn(n, rank, |_| 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor<f64>) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        assert_eq!(self.rank, 2);
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| *self.at2(i, j))
    }

    pub fn from_matrix(m: &nalgebra::DMatrix<f64>) -> Self {
        Tensor::from_fn(m.nrows(), 2, |idx| m[(idx[0], idx[1])])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t = Tensor::from_fn(3, 3, |idx| idx[0] * 100 + idx[1] * 10 + idx[2]);
        assert_eq!(*t.at3(2, 1, 0), 210);
        assert_eq!(*t.get(&[0, 2, 1]), 21);
        assert_eq!(t.data().len(), 27);
    }

    #[test]
    fn fallible_construction_reports_first_error() {
        let r: Result<Tensor<usize>, usize> =
            Tensor::try_from_fn(2, 2, |idx| if idx[0] == 1 { Err(idx[1]) } else { Ok(0) });
        assert_eq!(r.unwrap_err(), 0);
    }
}
