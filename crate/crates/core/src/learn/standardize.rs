use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Per-column z-scoring. Columns with zero spread map to 0.
///
/// Values are first clipped to the fitted column range, so rows outside the
/// training data (an unseen weekday, say) do not push a network into
/// extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub std: Vec<f64>,
    /// Column ranges; empty disables clipping.
    #[serde(default)]
    pub min: Vec<f64>,
    #[serde(default)]
    pub max: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Standardizer {
        let n = x.nrows().max(1) as f64;
        let mean: Vec<f64> = x.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
        let std = x
            .columns()
            .into_iter()
            .zip(&mean)
            .map(|(c, m)| {
                let var = c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 1e-12 * m.abs().max(1.0) {
                    s
                } else {
                    0.0
                }
            })
            .collect();
        let fold = |init: f64, f: fn(f64, f64) -> f64| -> Vec<f64> {
            x.columns().into_iter().map(|c| c.fold(init, |a, &v| f(a, v))).collect()
        };
        let (min, max) = if x.nrows() == 0 {
            (Vec::new(), Vec::new())
        } else {
            (fold(f64::INFINITY, f64::min), fold(f64::NEG_INFINITY, f64::max))
        };
        Standardizer { mean, std, min, max }
    }

    /// Identity scaling for `dim` columns.
    pub fn identity(dim: usize) -> Standardizer {
        Standardizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            min: Vec::new(),
            max: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            let (lo, hi) = match (self.min.get(j), self.max.get(j)) {
                (Some(&lo), Some(&hi)) => (lo, hi),
                _ => (f64::NEG_INFINITY, f64::INFINITY),
            };
            col.mapv_inplace(|v| if s > 0.0 { (v.clamp(lo, hi) - m) / s } else { 0.0 });
        }
        out
    }

    /// Maps standardized values back to the original scale.
    pub fn inverse(&self, z: ArrayView2<f64>) -> Array2<f64> {
        let mut out = z.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn constant_column_maps_to_zero() {
        let x = array![[1.0, 7.0], [3.0, 7.0], [5.0, 7.0]];
        let s = Standardizer::fit(x.view());
        let z = s.transform(x.view());
        assert_eq!(z.column(1).to_vec(), vec![0.0; 3]);
        assert_eq!(s.std[1], 0.0);
        let back = s.inverse(z.view());
        assert!(back.iter().zip(x.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn values_outside_the_fitted_range_are_clipped() {
        let x = array![[0.0], [4.0]];
        let s = Standardizer::fit(x.view());
        let z = s.transform(array![[-3.0], [9.0], [2.0]].view());
        assert_eq!(z.column(0).to_vec(), vec![-1.0, 1.0, 0.0]);
        let id = Standardizer::identity(1);
        assert_eq!(id.transform(array![[9.0]].view())[[0, 0]], 9.0);
    }

    proptest! {
        #[test]
        fn zero_mean_unit_std(rows in prop::collection::vec(prop::collection::vec(-1e4f64..1e4, 3), 2..40)) {
            let n = rows.len();
            let x = Array2::from_shape_vec((n, 3), rows.concat()).unwrap();
            let s = Standardizer::fit(x.view());
            let z = s.transform(x.view());
            for (j, col) in z.columns().into_iter().enumerate() {
                let m = col.sum() / n as f64;
                prop_assert!(m.abs() < 1e-9);
                if s.std[j] > 0.0 {
                    let sd = (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
                    prop_assert!((sd - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
