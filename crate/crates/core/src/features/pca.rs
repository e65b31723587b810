//! Principal component analysis via a cyclic Jacobi eigensolver.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default number of retained components.
pub const DEFAULT_COMPONENTS: usize = 18;

/// Eigenvalues below this fraction of the largest one count as zero when
/// determining rank.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal rows, one per retained component.
    pub components: Vec<Vec<f64>>,
    /// Variance along each retained component, nonincreasing.
    pub explained_variance: Vec<f64>,
    /// All covariance eigenvalues, nonincreasing, with round-off negatives
    /// clamped to zero.
    pub spectrum: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors
/// as columns. Each eigenvector's largest-magnitude entry is made positive.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        fix_sign(&mut col);
        vectors.column_mut(dst).assign(&col);
    }
    Ok((values, vectors))
}

fn fix_sign(v: &mut Array1<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// Sample covariance with the (n − 1) divisor.
pub fn covariance(x: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Fit(format!("covariance needs at least 2 rows, got {n}")));
    }
    let mean = x.mean_axis(Axis(0)).expect("nonempty");
    let centered = x - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    Ok((mean, cov))
}

/// Fits PCA keeping the top `k` components, clipped to the rank of the
/// sample covariance.
pub fn fit_pca(x: &Array2<f64>, k: usize) -> Result<PcaModel> {
    let (mean, cov) = covariance(x)?;
    let (values, vectors) = symmetric_eigen(&cov)?;
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let rank = values.iter().filter(|&&l| top > 0.0 && l > top * RANK_TOL).count();
    let keep = k.min(rank);
    Ok(PcaModel {
        mean: mean.to_vec(),
        components: (0..keep).map(|j| vectors.column(j).to_vec()).collect(),
        explained_variance: values[..keep].to_vec(),
        spectrum: values.iter().map(|&l| l.max(0.0)).collect(),
    })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn transform(&self, x: ArrayView1<f64>) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x.iter().zip(&self.mean)).map(|(w, (v, m))| w * (v - m)).sum())
            .collect())
    }

    /// Maps component scores back to the input space.
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.output_dim() {
            return Err(Error::Dimension {
                expected: self.output_dim(),
                got: z.len(),
            });
        }
        let mut out = self.mean.clone();
        for (c, s) in self.components.iter().zip(z) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += s * w;
            }
        }
        Ok(out)
    }
}

/// `(x − mean) · componentsᵀ`
pub fn apply_pca(model: &PcaModel, x: &[f64]) -> Result<Vec<f64>> {
    model.transform(ArrayView1::from(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, d), |_| rng.random_range(-3.0..3.0))
    }

    #[test]
    fn line_along_axis() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [6.0, 5.0]];
        let m = fit_pca(&x, 18).unwrap();
        assert_eq!(m.output_dim(), 1);
        assert_abs_diff_eq!(m.components[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.components[0][1], 0.0, epsilon = 1e-12);
        // sample variance of 1, 2, 3, 6 with (n - 1) divisor
        assert_abs_diff_eq!(m.explained_variance[0], 14.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_points() {
        let x = array![[1.0, 1.0], [-1.0, -1.0], [2.0, 2.0], [-2.0, -2.0]];
        let m = fit_pca(&x, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(m.components[0][0], h, epsilon = 1e-12);
        assert_abs_diff_eq!(m.components[0][1], h, epsilon = 1e-12);
        // covariance [[10/3, 10/3], [10/3, 10/3]] has eigenvalues 20/3 and 0
        assert_abs_diff_eq!(m.spectrum[0], 20.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.spectrum[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_maps_to_zero_and_unit_component_to_one() {
        let x = array![[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]];
        let m = fit_pca(&x, 1).unwrap();
        assert_eq!(apply_pca(&m, &m.mean).unwrap(), vec![0.0]);
        let shifted: Vec<f64> = m.mean.iter().zip(&m.components[0]).map(|(a, b)| a + b).collect();
        assert_abs_diff_eq!(apply_pca(&m, &shifted).unwrap()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_and_too_few_rows() {
        let x = array![[0.0, 1.0], [2.0, 0.0], [4.0, 3.0]];
        let m = fit_pca(&x, 2).unwrap();
        assert!(matches!(apply_pca(&m, &[1.0]), Err(Error::Dimension { .. })));
        assert!(matches!(fit_pca(&array![[1.0, 2.0]], 2), Err(Error::Fit(_))));
    }

    #[test]
    fn transform_matches_direct_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 40, 5);
        let m = fit_pca(&x, 3).unwrap();
        let w = Array2::from_shape_fn((3, 5), |(i, j)| m.components[i][j]);
        for _ in 0..10 {
            let v = Array1::from_shape_fn(5, |_| rng.random_range(-5.0..5.0));
            let expected = w.dot(&(&v - &Array1::from(m.mean.clone())));
            let got = m.transform(v.view()).unwrap();
            for (a, b) in got.iter().zip(expected.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn full_rank_round_trip_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 30, 6);
        let m = fit_pca(&x, 6).unwrap();
        assert_eq!(m.output_dim(), 6);
        for i in 0..6 {
            for j in 0..6 {
                let dot: f64 = m.components[i].iter().zip(&m.components[j]).map(|(a, b)| a * b).sum();
                assert_abs_diff_eq!(dot, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-9);
            }
        }
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        for row in x.rows() {
            let back = m.inverse_transform(&m.transform(row).unwrap()).unwrap();
            for (a, b) in back.iter().zip(row.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn jacobi_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let d = 2 + trial % 7;
            let x = random_matrix(&mut rng, 3 * d, d);
            let (_, cov) = covariance(&x).unwrap();
            let (values, vectors) = symmetric_eigen(&cov).unwrap();
            let oracle = nalgebra::DMatrix::from_fn(d, d, |i, j| cov[[i, j]]).symmetric_eigen();
            let mut ov: Vec<(f64, usize)> = oracle.eigenvalues.iter().copied().zip(0..).collect();
            ov.sort_by(|a, b| b.0.total_cmp(&a.0));
            for (k, &(lambda, idx)) in ov.iter().enumerate() {
                assert_abs_diff_eq!(values[k], lambda, epsilon = 1e-8);
                let dot: f64 = (0..d).map(|i| vectors[[i, k]] * oracle.eigenvectors[(i, idx)]).sum();
                assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-8);
            }
        }
    }
}
