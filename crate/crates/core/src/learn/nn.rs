//! Mini-batch Adam loop with early stopping, shared by the neural models.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Adam;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs_run: usize,
    /// Epoch (1-based) whose parameters were kept.
    pub best_epoch: usize,
    pub best_valid_rmse: Option<f64>,
    pub train_loss: Vec<f64>,
    pub valid_rmse: Vec<f64>,
}

pub(crate) struct LoopSettings {
    pub n_train: usize,
    pub batch_size: usize,
    pub n_epoch: usize,
    pub patience: usize,
    pub lr: f64,
    pub seed: u64,
}

/// Runs Adam over shuffled mini-batches. `loss_grad(params, batch, grads)`
/// writes the batch gradient into the zeroed `grads` and returns the batch
/// loss; `valid_rmse(params)` scores the current parameters, or returns
/// `None` when there is no validation data. The best-scoring parameters are
/// returned.
pub(crate) fn train_adam<G, V>(
    mut params: Vec<f64>,
    s: &LoopSettings,
    mut loss_grad: G,
    mut valid_rmse: V,
) -> Result<(Vec<f64>, TrainingLog)>
where
    G: FnMut(&[f64], &[usize], &mut [f64]) -> f64,
    V: FnMut(&[f64]) -> Option<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed_0f_ad4a);
    let mut opt = Adam::new(s.lr, params.len());
    let mut grads = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..s.n_train).collect();
    let mut log = TrainingLog::default();
    let mut best = params.clone();
    let mut best_score = f64::INFINITY;
    let mut stale = 0;
    let batch = s.batch_size.max(1);
    for epoch in 1..=s.n_epoch {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let loss = loss_grad(&params, chunk, &mut grads);
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged(format!(
                    "non-finite loss {loss} at epoch {epoch} (learning rate {})",
                    s.lr
                )));
            }
            total += loss * chunk.len() as f64;
            opt.step(&mut params, &grads);
        }
        log.train_loss.push(total / s.n_train.max(1) as f64);
        log.epochs_run = epoch;
        match valid_rmse(&params) {
            Some(score) => {
                if !score.is_finite() {
                    return Err(Error::Diverged(format!("non-finite validation RMSE at epoch {epoch}")));
                }
                log.valid_rmse.push(score);
                if score < best_score {
                    best_score = score;
                    best.copy_from_slice(&params);
                    log.best_epoch = epoch;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= s.patience {
                        break;
                    }
                }
            }
            None => {
                best.copy_from_slice(&params);
                log.best_epoch = epoch;
            }
        }
    }
    if best_score.is_finite() {
        log.best_valid_rmse = Some(best_score);
    }
    Ok((best, log))
}

/// Relative error `‖a − b‖ / max(‖a‖ + ‖b‖, tiny)` between two gradients.
pub fn gradient_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(1e-300)
}

/// Central finite-difference gradient of `f` at `params`.
pub fn numeric_gradient<F: FnMut(&[f64]) -> f64>(params: &[f64], h: f64, mut f: F) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
