//! Reproducible low-discrepancy sampling and deterministic reductions.

use crate::chart::Chart;
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 256;
pub const DEFAULT_SEED: u32 = 0x5eed;

const MAX_DIMS: usize = sobol_burley::NUM_DIMENSIONS as usize;
const MAX_INDEX: u32 = 1 << 16;

/// Owen-scrambled Sobol point in `[0, 1)^dim`.
pub fn unit_point(index: u32, dim: usize, seed: u32) -> Vec<f64> {
    assert!(dim <= MAX_DIMS, "at most {MAX_DIMS} sampling dimensions");
    (0..dim)
        .map(|d| sobol_burley::sample(index, d as u32, seed) as f64)
        .collect()
}

/// Maps unit-cube samples into `bounds`, keeping those inside `accept`.
pub fn box_points(
    bounds: &[(f64, f64)],
    count: usize,
    seed: u32,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(count);
    let limit = (count as u64 * 64).clamp(1024, MAX_INDEX as u64) as u32;
    let mut index = 0u32;
    while out.len() < count {
        if index >= limit {
            return Err(Error::Numeric(format!(
                "only {} of {count} samples landed in the domain",
                out.len()
            )));
        }
        let u = unit_point(index, bounds.len(), seed);
        let p: Vec<f64> = u.iter().zip(bounds).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect();
        if accept(&p) {
            out.push(p);
        }
        index += 1;
    }
    Ok(out)
}

/// `count` points from the chart's sample box that lie in its domain.
pub fn sample_points(chart: &Chart, count: usize, seed: u32) -> Result<Vec<Vec<f64>>> {
    box_points(chart.sample_box(), count, seed, |p| chart.contains(p))
}

/// Pairwise summation in a fixed tree order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Population standard deviation.
pub fn stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&sq) / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn samples_are_reproducible_and_inside() {
        let bounds = [(-1.0, 1.0), (2.0, 3.0)];
        let a = box_points(&bounds, 64, 7, |p| p[0] * p[0] < 0.5).unwrap();
        let b = box_points(&bounds, 64, 7, |p| p[0] * p[0] < 0.5).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p[0] * p[0] < 0.5 && p[1] >= 2.0 && p[1] < 3.0));
        let c = box_points(&bounds, 64, 8, |_| true).unwrap();
        assert_ne!(a[0], c[0]);
    }

    #[test]
    fn impossible_domain_is_an_error() {
        assert!(box_points(&[(0.0, 1.0)], 4, 1, |_| false).is_err());
    }

    proptest! {
        #[test]
        fn pairwise_sum_matches_naive(v in proptest::collection::vec(-1e3f64..1e3, 0..200)) {
            let naive: f64 = v.iter().sum();
            prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-9 * (1.0 + naive.abs()));
        }

        #[test]
        fn stddev_is_shift_invariant(v in proptest::collection::vec(-10f64..10.0, 1..50), s in -100f64..100.0) {
            let shifted: Vec<f64> = v.iter().map(|x| x + s).collect();
            prop_assert!((stddev(&v) - stddev(&shifted)).abs() < 1e-9);
        }
    }
}
