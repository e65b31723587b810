//! Random hyper-parameter search.
//!
//! Integer counts are `round(x)` or `round(2^x)` with `x` uniform over an
//! exponent range, and learning rates are `2^-x` or `10^-x` likewise, which
//! makes every sampler log-uniform in the quantity it controls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::{CnnConfig, GbdtConfig, MlpConfig, ModelKind, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial<C> {
    pub index: usize,
    pub config: C,
    pub valid_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<C> {
    /// Index into `trials` of the lowest validation RMSE (first on ties).
    pub best: usize,
    pub trials: Vec<Trial<C>>,
}

impl<C> SearchOutcome<C> {
    pub fn best_trial(&self) -> &Trial<C> {
        &self.trials[self.best]
    }
}

/// Draws `budget` configurations and keeps the one with the lowest score
/// returned by `eval`. Non-finite scores never win.
pub fn hyper_search<C, S, E>(budget: usize, seed: u64, mut sample: S, mut eval: E) -> Result<SearchOutcome<C>>
where
    C: Clone,
    S: FnMut(&mut ChaCha8Rng) -> C,
    E: FnMut(&C) -> Result<f64>,
{
    if budget == 0 {
        return Err(Error::Parameter("search budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(budget);
    let mut best: Option<usize> = None;
    for index in 0..budget {
        let config = sample(&mut rng);
        let score = eval(&config)?;
        let score = if score.is_finite() { score } else { f64::INFINITY };
        if best.is_none_or(|b: usize| score < trials.get(b).map_or(f64::INFINITY, |t: &Trial<C>| t.valid_rmse)) {
            best = Some(index);
        }
        trials.push(Trial {
            index,
            config,
            valid_rmse: score,
        });
    }
    Ok(SearchOutcome {
        best: best.unwrap_or(0),
        trials,
    })
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

/// `round(2^x)`, `x ~ U[lo, hi]`
pub fn pow2_count(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> usize {
    2f64.powf(uniform(rng, lo, hi)).round() as usize
}

/// `round(x)`, `x ~ U[lo, hi]`
pub fn linear_count(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> usize {
    uniform(rng, lo, hi).round() as usize
}

pub fn sample_mlp(rng: &mut ChaCha8Rng, base: &MlpConfig) -> MlpConfig {
    MlpConfig {
        n_node: pow2_count(rng, 2.0, 12.0),
        n_layer: linear_count(rng, 1.0, 11.0),
        learning_rate: 2f64.powf(-uniform(rng, 2.0, 17.0)),
        ..*base
    }
}

/// Filter counts draw `f` from `[0, 6]` so the single-filter network is
/// reachable.
pub fn sample_trajcnn(rng: &mut ChaCha8Rng, base: &CnnConfig) -> CnnConfig {
    CnnConfig {
        n_fc_layer: linear_count(rng, 1.0, 2.0),
        n_fc: pow2_count(rng, 1.0, 11.0),
        n_conv_layer: linear_count(rng, 1.0, 4.0),
        n_conv: pow2_count(rng, 0.0, 6.0),
        batch_size: pow2_count(rng, 1.0, 8.0),
        learning_rate: 10f64.powf(-uniform(rng, 3.0, 6.0)),
        ..*base
    }
}

pub fn sample_gbdt(rng: &mut ChaCha8Rng, base: &GbdtConfig) -> GbdtConfig {
    GbdtConfig {
        learning_rate: 10f64.powf(uniform(rng, -3.0, -1.0)),
        num_leaves: rng.random_range(8..=64),
        ..*base
    }
}

/// Copy of `base` with the hyper-parameters of `base.model` resampled.
pub fn sample_train_config(rng: &mut ChaCha8Rng, base: &TrainConfig) -> TrainConfig {
    let mut c = base.clone();
    match base.model {
        ModelKind::Lr => {}
        ModelKind::Mlp => c.mlp = sample_mlp(rng, &base.mlp),
        ModelKind::Gbdt => c.gbdt = sample_gbdt(rng, &base.gbdt),
        ModelKind::TrajCnn => c.trajcnn = sample_trajcnn(rng, &base.trajcnn),
    }
    c
}

/// Trial log as CSV: index, validation RMSE, then the configuration as JSON.
pub fn write_trials_csv<W: Write, C: Serialize>(w: W, trials: &[Trial<C>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "valid_rmse", "config"])?;
    for t in trials {
        out.write_record([t.index.to_string(), t.valid_rmse.to_string(), serde_json::to_string(&t.config)?])?;
    }
    out.flush()?;
    Ok(())
}
