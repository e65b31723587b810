//! Gradient-boosted regression trees with histogram splits and leaf-wise
//! growth, for squared loss on the departure delay.

mod binning;
mod tree;

pub use binning::{BinMapper, BinnedMatrix};
pub use tree::{grow_tree, split_gain, GrowParams, SplitNode, Tree};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{rmse, GbdtConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Training target mean; the prediction of the empty ensemble.
    pub init: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Internal nodes testing each feature, summed over all trees.
    pub split_counts: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GbdtLog {
    /// Training RMSE after each round, starting with round 0 (the mean).
    pub train_rmse: Vec<f64>,
    pub valid_rmse: Vec<f64>,
    /// Number of trees kept.
    pub best_rounds: usize,
}

impl GbdtModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| self.learning_rate * t.predict(x)).sum::<f64>()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        Ok(x.rows()
            .into_iter()
            .map(|r| {
                let row = r.to_vec();
                self.predict_row(&row)
            })
            .collect())
    }

    pub fn n_internal_nodes(&self) -> usize {
        self.trees.iter().map(|t| t.nodes.len()).sum()
    }

    fn recount_splits(&mut self) {
        let mut counts = vec![0u64; self.n_features];
        for t in &self.trees {
            for n in &t.nodes {
                counts[n.feature] += 1;
            }
        }
        self.split_counts = counts;
    }
}

/// Boosts trees on `y`, early-stopping on `valid` when given: training stops
/// after `patience` rounds without a validation improvement and the
/// ensemble is cut back to the best round.
pub fn fit_gbdt(
    x: ArrayView2<f64>,
    y: &[f64],
    valid: Option<(ArrayView2<f64>, &[f64])>,
    config: &GbdtConfig,
) -> Result<(GbdtModel, GbdtLog)> {
    let n = x.nrows();
    if n == 0 || y.len() != n {
        return Err(Error::Contract(format!("{} feature rows for {} targets", n, y.len())));
    }
    if let Some((vx, vy)) = valid {
        if vx.ncols() != x.ncols() || vx.nrows() != vy.len() {
            return Err(Error::Contract("validation set does not match training layout".into()));
        }
    }
    let init = y.iter().sum::<f64>() / n as f64;
    let mut model = GbdtModel {
        init,
        learning_rate: config.learning_rate,
        n_features: x.ncols(),
        trees: Vec::new(),
        split_counts: vec![0; x.ncols()],
    };
    let data = BinnedMatrix::new(x, config.max_bins);
    let rows: Vec<usize> = (0..n).collect();
    let mut f = vec![init; n];
    let mut residual: Vec<f64> = y.iter().map(|t| t - init).collect();
    let mut log = GbdtLog {
        train_rmse: vec![rmse(&f, y)?],
        ..Default::default()
    };
    let valid_rows: Option<(Vec<Vec<f64>>, &[f64])> =
        valid.map(|(vx, vy)| (vx.rows().into_iter().map(|r| r.to_vec()).collect(), vy));
    let mut valid_pred: Vec<f64> = valid_rows.as_ref().map(|(r, _)| vec![init; r.len()]).unwrap_or_default();
    let mut best_score = f64::INFINITY;
    let mut best_rounds = 0;
    if let Some((_, vy)) = &valid_rows {
        if !vy.is_empty() {
            best_score = rmse(&valid_pred, vy)?;
            log.valid_rmse.push(best_score);
        }
    }
    let params = GrowParams {
        num_leaves: config.num_leaves,
        min_data_in_leaf: config.min_data_in_leaf,
        histogram_subtraction: config.histogram_subtraction,
    };
    for round in 1..=config.n_estimators {
        let Some((tree, members)) = grow_tree(&data, &rows, &residual, &params) else {
            break;
        };
        for (leaf, rs) in members.iter().enumerate() {
            let step = config.learning_rate * tree.leaves[leaf];
            for &r in rs {
                f[r] += step;
                residual[r] = y[r] - f[r];
            }
        }
        log.train_rmse.push(rmse(&f, y)?);
        if let Some((vrows, vy)) = &valid_rows {
            if !vy.is_empty() {
                for (p, row) in valid_pred.iter_mut().zip(vrows) {
                    *p += config.learning_rate * tree.predict(row);
                }
                let score = rmse(&valid_pred, vy)?;
                log.valid_rmse.push(score);
                model.trees.push(tree);
                if score < best_score {
                    best_score = score;
                    best_rounds = round;
                } else if round - best_rounds >= config.patience {
                    break;
                }
                continue;
            }
        }
        model.trees.push(tree);
        best_rounds = round;
    }
    model.trees.truncate(best_rounds);
    model.recount_splits();
    log.best_rounds = model.trees.len();
    Ok((model, log))
}
