//! Ordinary least squares through the normal equations.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::Standardizer;
use crate::{Error, Result};

/// Diagonal jitter added to the scaled normal matrix.
pub const JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// In-place Cholesky factorization of a symmetric positive definite matrix;
/// returns the lower factor.
pub(crate) fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Fit(format!("matrix not positive definite at pivot {i}")));
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b`.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut z = b.clone();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[[i, k]] * z[k];
        }
        z[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            z[i] -= l[[k, i]] * z[k];
        }
        z[i] /= l[[i, i]];
    }
    z
}

/// Least-squares fit with intercept.
///
/// Columns are centered and scaled before solving so the jitter acts evenly;
/// constant columns get weight 0, so rank-deficient inputs still yield a
/// (near) minimum-norm solution.
pub fn fit_linreg(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<LinearModel> {
    let n = x.nrows();
    if n == 0 || y.len() != n {
        return Err(Error::Dimension { expected: n, got: y.len() });
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let y_mean = y.sum() / n as f64;
    let yc = y.mapv(|v| v - y_mean);
    let mut gram = z.t().dot(&z);
    for i in 0..gram.nrows() {
        gram[[i, i]] += JITTER * n as f64;
    }
    let rhs = z.t().dot(&yc);
    let w_scaled = if gram.nrows() == 0 {
        Array1::zeros(0)
    } else {
        cholesky_solve(&cholesky(&gram)?, &rhs)
    };
    let mut weights = Vec::with_capacity(w_scaled.len());
    let mut intercept = y_mean;
    for (j, w) in w_scaled.iter().enumerate() {
        let s = scaler.std[j];
        let wj = if s > 0.0 { w / s } else { 0.0 };
        intercept -= wj * scaler.mean[j];
        weights.push(wj);
    }
    Ok(LinearModel { weights, intercept })
}

impl LinearModel {
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                got: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|r| self.intercept + r.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }
}
