//! Per-feature histogram bins.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

/// Upper bin boundaries of one feature, strictly increasing, the last one
/// `+∞`. A value falls in the first bin whose bound is `≥` the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub upper_bounds: Vec<f64>,
}

impl BinMapper {
    /// With at most `max_bins` distinct values every value gets its own bin
    /// and bounds sit at midpoints between neighbours; otherwise bounds are
    /// placed after evenly spaced sample quantiles.
    pub fn fit(values: &[f64], max_bins: usize) -> BinMapper {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        let mut distinct = sorted.clone();
        distinct.dedup();
        let mid = |a: f64, b: f64| a + (b - a) / 2.0;
        let mut upper = Vec::new();
        if distinct.len() <= max_bins {
            for w in distinct.windows(2) {
                upper.push(mid(w[0], w[1]));
            }
        } else {
            let n = sorted.len();
            for k in 1..max_bins {
                let v = sorted[(k * n / max_bins).min(n - 1)];
                // place the bound between v and the next larger distinct value
                let pos = distinct.partition_point(|d| *d <= v);
                if pos < distinct.len() {
                    let b = mid(distinct[pos - 1], distinct[pos]);
                    if upper.last().is_none_or(|&last| b > last) {
                        upper.push(b);
                    }
                }
            }
        }
        upper.push(f64::INFINITY);
        BinMapper { upper_bounds: upper }
    }

    pub fn n_bins(&self) -> usize {
        self.upper_bounds.len()
    }

    pub fn bin(&self, v: f64) -> usize {
        self.upper_bounds.partition_point(|&ub| ub < v).min(self.n_bins() - 1)
    }
}

/// Training matrix in bin space, row-major.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub mappers: Vec<BinMapper>,
    pub bins: Vec<u16>,
    pub n_rows: usize,
    pub n_features: usize,
    /// Start of each feature's block in a flat histogram.
    pub offsets: Vec<usize>,
    pub total_bins: usize,
}

impl BinnedMatrix {
    pub fn new(x: ArrayView2<f64>, max_bins: usize) -> BinnedMatrix {
        let max_bins = max_bins.clamp(2, u16::MAX as usize);
        let (n, d) = x.dim();
        let mappers: Vec<BinMapper> = (0..d)
            .map(|j| BinMapper::fit(&x.column(j).to_vec(), max_bins))
            .collect();
        let mut bins = vec![0u16; n * d];
        for i in 0..n {
            for j in 0..d {
                bins[i * d + j] = mappers[j].bin(x[[i, j]]) as u16;
            }
        }
        let mut offsets = Vec::with_capacity(d);
        let mut total = 0;
        for m in &mappers {
            offsets.push(total);
            total += m.n_bins();
        }
        BinnedMatrix {
            mappers,
            bins,
            n_rows: n,
            n_features: d,
            offsets,
            total_bins: total,
        }
    }

    #[inline]
    pub fn bin(&self, row: usize, feature: usize) -> usize {
        self.bins[row * self.n_features + feature] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn few_distinct_values_use_midpoints() {
        let m = BinMapper::fit(&[3.0, 1.0, 2.0, 2.0, 1.0], 255);
        assert_eq!(m.upper_bounds, vec![1.5, 2.5, f64::INFINITY]);
        assert_eq!(m.bin(1.0), 0);
        assert_eq!(m.bin(1.5), 0);
        assert_eq!(m.bin(2.0), 1);
        assert_eq!(m.bin(100.0), 2);
        assert_eq!(m.bin(-5.0), 0);
    }

    #[test]
    fn many_values_are_capped() {
        let v: Vec<f64> = (0..10_000).map(|i| (i as f64).sqrt()).collect();
        let m = BinMapper::fit(&v, 255);
        assert!(m.n_bins() <= 255);
        assert!(m.n_bins() > 200);
        assert!(m.upper_bounds.windows(2).all(|w| w[0] < w[1]));
        let mut counts = vec![0usize; m.n_bins()];
        for x in &v {
            counts[m.bin(*x)] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0 && c < 100));
    }

    #[test]
    fn constant_feature_has_one_bin() {
        let m = BinMapper::fit(&[4.0; 10], 255);
        assert_eq!(m.n_bins(), 1);
    }
}
