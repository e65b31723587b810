//! Multi-layer perceptron regressor over all six label columns.

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{mse_rows, DenseLayout};
use super::nn::{train_adam, LoopSettings, TrainingLog};
use super::{rmse, MlpConfig, Standardizer};
use crate::ingest::LabelVector;
use crate::{Error, Result};

/// Network plus the input and target scalings fitted on training data.
/// The network itself operates on z-scored inputs and targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layout: DenseLayout,
    #[serde(with = "super::serialize::f64_base64")]
    pub params: Vec<f64>,
    pub input: Standardizer,
    pub target: Standardizer,
}

impl MlpModel {
    /// Fresh Glorot-initialized network with identity scalings.
    pub fn init(n_in: usize, n_out: usize, config: &MlpConfig, seed: u64) -> MlpModel {
        let mut sizes = vec![n_in];
        sizes.extend(std::iter::repeat_n(config.n_node, config.n_layer));
        sizes.push(n_out);
        let layout = DenseLayout::new(sizes);
        let mut params = vec![0.0; layout.n_params()];
        layout.init(&mut ChaCha8Rng::seed_from_u64(seed), &mut params);
        MlpModel {
            layout,
            params,
            input: Standardizer::identity(n_in),
            target: Standardizer::identity(n_out),
        }
    }

    /// Loss on already scaled data; gradient accumulated into `grads`.
    pub fn loss_and_grad(&self, params: &[f64], xz: ArrayView2<f64>, yz: ArrayView2<f64>, grads: &mut [f64]) -> f64 {
        let acts = self.layout.forward(params, xz);
        let (loss, d_out) = mse_rows(acts.last().expect("output"), yz);
        self.layout.backward(params, &acts, d_out, grads);
        loss
    }

    pub fn loss(&self, params: &[f64], xz: ArrayView2<f64>, yz: ArrayView2<f64>) -> f64 {
        let out = self.layout.predict(params, xz);
        mse_rows(&out, yz).0
    }

    /// Predictions in original target units, one column per label.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input.dim() {
            return Err(Error::Dimension {
                expected: self.input.dim(),
                got: x.ncols(),
            });
        }
        let z = self.layout.predict(&self.params, self.input.transform(x).view());
        Ok(self.target.inverse(z.view()))
    }
}

fn unscaled_target_std(target: &Standardizer) -> Standardizer {
    // Constant target columns keep a unit scale so the network still sees 0.
    Standardizer {
        std: target.std.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect(),
        ..target.clone()
    }
}

/// Trains on `x`/`y` (targets in minutes, `y` has one column per label),
/// early-stopping on the departure-delay RMSE of `valid` when given.
pub fn fit_mlp(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    valid: Option<(ArrayView2<f64>, ArrayView2<f64>)>,
    config: &MlpConfig,
    seed: u64,
) -> Result<(MlpModel, TrainingLog)> {
    if x.nrows() != y.nrows() || x.nrows() == 0 {
        return Err(Error::Contract(format!(
            "feature rows ({}) and target rows ({}) must match and be nonzero",
            x.nrows(),
            y.nrows()
        )));
    }
    let mut model = MlpModel::init(x.ncols(), y.ncols(), config, seed);
    model.input = Standardizer::fit(x);
    model.target = unscaled_target_std(&Standardizer::fit(y));
    let xz = model.input.transform(x);
    let yz = model.target.transform(y);
    let total = if y.ncols() == LabelVector::NAMES.len() { LabelVector::TOTAL } else { y.ncols() - 1 };
    let valid = valid.map(|(vx, vy)| (model.input.transform(vx), vy.column(total).to_vec()));
    let settings = LoopSettings {
        n_train: x.nrows(),
        batch_size: config.batch_size,
        n_epoch: config.n_epoch,
        patience: config.patience,
        lr: config.learning_rate,
        seed,
    };
    let (params, log) = {
        let m = &model;
        train_adam(
            model.params.clone(),
            &settings,
            |p, batch, g| {
                let bx = xz.select(Axis(0), batch);
                let by = yz.select(Axis(0), batch);
                m.loss_and_grad(p, bx.view(), by.view(), g)
            },
            |p| {
                let (vx, vy) = valid.as_ref()?;
                let z = m.layout.predict(p, vx.view());
                let pred = m.target.inverse(z.view());
                rmse(&pred.column(total).to_vec(), vy).ok()
            },
        )?
    };
    model.params = params;
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::nn::{gradient_relative_error, numeric_gradient};
    use rand::Rng;

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..10 {
            let config = MlpConfig {
                n_layer: 1 + trial % 3,
                n_node: 3 + trial % 4,
                ..Default::default()
            };
            let model = MlpModel::init(4, 6, &config, trial as u64);
            let mut params = model.params.clone();
            // random offsets keep pre-activations away from the ReLU kink
            for p in params.iter_mut() {
                *p += rng.random_range(-0.2..0.2);
            }
            let x = Array2::from_shape_fn((5, 4), |_| rng.random_range(-2.0..2.0));
            let y = Array2::from_shape_fn((5, 6), |_| rng.random_range(-2.0..2.0));
            let mut g = vec![0.0; params.len()];
            model.loss_and_grad(&params, x.view(), y.view(), &mut g);
            let fd = numeric_gradient(&params, 1e-6, |p| model.loss(p, x.view(), y.view()));
            let err = gradient_relative_error(&g, &fd);
            assert!(err < 1e-4, "trial {trial}: relative error {err}");
        }
    }

    #[test]
    fn fits_linear_toy_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((64, 2), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((64, 6), |(i, j)| (j as f64 + 1.0) * x[[i, 0]] - 0.5 * x[[i, 1]]);
        let config = MlpConfig {
            n_layer: 1,
            n_node: 16,
            learning_rate: 0.01,
            batch_size: 64,
            n_epoch: 3000,
            patience: 50,
        };
        let (model, log) = fit_mlp(x.view(), y.view(), None, &config, 3).unwrap();
        let pred = model.predict(x.view()).unwrap();
        let err = rmse(&pred.column(5).to_vec(), &y.column(5).to_vec()).unwrap();
        assert!(err < 0.01, "train rmse {err}");
        assert_eq!(log.epochs_run, 3000);
    }

    #[test]
    fn deterministic_given_seed() {
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let y = Array2::from_shape_fn((30, 6), |(i, _)| (i % 5) as f64);
        let config = MlpConfig {
            n_node: 8,
            n_epoch: 20,
            batch_size: 8,
            ..Default::default()
        };
        let a = fit_mlp(x.view(), y.view(), Some((x.view(), y.view())), &config, 9).unwrap();
        let b = fit_mlp(x.view(), y.view(), Some((x.view(), y.view())), &config, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert!(a.1.best_valid_rmse.is_some());
    }

    #[test]
    fn row_mismatch_is_contract_error() {
        let x = Array2::zeros((3, 2));
        let y = Array2::zeros((4, 6));
        assert!(matches!(
            fit_mlp(x.view(), y.view(), None, &MlpConfig::default(), 0),
            Err(Error::Contract(_))
        ));
    }
}
