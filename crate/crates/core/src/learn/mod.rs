//! Delay regressors: least squares, multilayer perceptron, gradient-boosted
//! trees and the trajectory CNN, with a shared training interface, model
//! files and random hyper-parameter search.

mod adam;
mod cnn;
mod config;
mod dense;
pub mod gbdt;
mod linreg;
mod metrics;
mod mlp;
pub mod nn;
pub mod search;
mod serialize;
mod standardize;
mod train;

pub use adam::Adam;
pub use cnn::{fit_trajcnn, CnnData, ConvBlock, TrajCnnModel};
pub use config::{CnnConfig, GbdtConfig, MlpConfig, ModelKind, TrainConfig};
pub use dense::{mse_rows, DenseLayout};
pub use gbdt::{fit_gbdt, GbdtLog, GbdtModel};
pub use linreg::{fit_linreg, LinearModel};
pub use metrics::{mae, mean, population_std, rmse};
pub use mlp::{fit_mlp, MlpModel};
pub use nn::TrainingLog;
pub use search::{hyper_search, SearchOutcome, Trial};
pub use serialize::{decode_f64s, encode_f64s, ModelFile, TrainedModel, MODEL_FORMAT_VERSION};
pub use standardize::Standardizer;
pub use train::{train_model, FitLog, TrainData};
