//! Model × feature-combination grid on a fixed train/test partition.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::{config_hash, derive_seed, inner_validation, Fold, SplitPlan};
use crate::features::{Dataset, FeatureGroup};
use crate::learn::{mae, rmse, train_model, FitLog, ModelFile, ModelKind, TrainConfig, TrainData};
use crate::raster::{fit_scaler, image_matrix, ScalerMode, TrajImage};
use crate::{Error, Result};

/// Input families a model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureCombo {
    #[serde(rename = "ref")]
    Ref,
    #[serde(rename = "ref+w")]
    RefW,
    #[serde(rename = "ref+atc")]
    RefAtc,
    #[serde(rename = "ref+w+atc")]
    RefWAtc,
    #[serde(rename = "ref+img")]
    RefImg,
    #[serde(rename = "ref+w+img")]
    RefWImg,
}

impl FeatureCombo {
    pub const ALL: [FeatureCombo; 6] = [
        FeatureCombo::Ref,
        FeatureCombo::RefW,
        FeatureCombo::RefAtc,
        FeatureCombo::RefWAtc,
        FeatureCombo::RefImg,
        FeatureCombo::RefWImg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureCombo::Ref => "ref",
            FeatureCombo::RefW => "ref+w",
            FeatureCombo::RefAtc => "ref+atc",
            FeatureCombo::RefWAtc => "ref+w+atc",
            FeatureCombo::RefImg => "ref+img",
            FeatureCombo::RefWImg => "ref+w+img",
        }
    }

    pub fn uses_weather(self) -> bool {
        matches!(self, FeatureCombo::RefW | FeatureCombo::RefWAtc | FeatureCombo::RefWImg)
    }

    pub fn uses_atc(self) -> bool {
        matches!(self, FeatureCombo::RefAtc | FeatureCombo::RefWAtc)
    }

    pub fn uses_images(self) -> bool {
        matches!(self, FeatureCombo::RefImg | FeatureCombo::RefWImg)
    }

    /// Tabular column groups for `model`: linear and tree models read the
    /// weather principal components, neural models the encoded weather.
    pub fn groups(self, model: ModelKind) -> Vec<FeatureGroup> {
        let mut g = vec![FeatureGroup::Reference];
        if self.uses_atc() {
            g.push(FeatureGroup::Atc);
        }
        if self.uses_weather() {
            g.push(if model.uses_weather_pca() {
                FeatureGroup::WeatherPca
            } else {
                FeatureGroup::WeatherRaw
            });
        }
        g
    }

    /// Image combos are reserved for TrajCNN, and TrajCNN needs images.
    pub fn applies_to(self, model: ModelKind) -> bool {
        self.uses_images() == model.needs_images()
    }

    pub fn parse_list(s: &str) -> Result<Vec<FeatureCombo>> {
        s.split(',').map(|c| c.trim().parse()).collect()
    }
}

impl fmt::Display for FeatureCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureCombo {
    type Err = Error;

    fn from_str(s: &str) -> Result<FeatureCombo> {
        FeatureCombo::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "unknown feature combination `{s}` (expected one of ref, ref+w, ref+atc, ref+w+atc, ref+img, ref+w+img)"
                ))
            })
    }
}

/// Dataset plus, optionally, the unscaled image of every row.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub dataset: Dataset,
    pub images: Option<Vec<TrajImage>>,
    pub scaler_mode: ScalerMode,
}

impl EvalSet {
    pub fn new(dataset: Dataset) -> EvalSet {
        EvalSet {
            dataset,
            images: None,
            scaler_mode: ScalerMode::default(),
        }
    }

    pub fn with_images(mut self, images: Vec<TrajImage>) -> Result<EvalSet> {
        if images.len() != self.dataset.len() {
            return Err(Error::Dimension {
                expected: self.dataset.len(),
                got: images.len(),
            });
        }
        self.images = Some(images);
        Ok(self)
    }
}

/// Settings shared by every cell of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Hyper-parameters per model kind; `model` is overridden per cell and
    /// `seed` is the master seed.
    pub train: TrainConfig,
    /// Trailing share of the training rows used for early stopping.
    pub inner_valid_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train: TrainConfig::default(),
            inner_valid_fraction: 0.2,
        }
    }
}

impl EvalConfig {
    /// Training config of one cell, seeded from the master seed, the model
    /// and the feature combination.
    pub fn cell_config(&self, model: ModelKind, combo: FeatureCombo) -> TrainConfig {
        let mut c = self.train.clone();
        c.model = model;
        c.seed = derive_seed(self.train.seed, &format!("{model}/{combo}"));
        c
    }
}

/// Test metrics and fitted model of one cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub rmse: f64,
    pub mae: f64,
    pub predictions: Vec<f64>,
    pub model: ModelFile,
    pub log: FitLog,
    pub n_train: usize,
    pub n_test: usize,
}

fn rows_of(m: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    m.select(Axis(0), rows)
}

/// Trains `config.model` on the fold's training rows and scores the test
/// rows on departure delay.
pub fn evaluate_cell(set: &EvalSet, fold: &Fold, config: &TrainConfig, combo: FeatureCombo, inner_valid_fraction: f64) -> Result<CellOutcome> {
    if !combo.applies_to(config.model) {
        return Err(Error::Contract(format!("{} cannot be trained on `{combo}`", config.model)));
    }
    if fold.train.is_empty() || fold.test.is_empty() {
        return Err(Error::Contract("fold has an empty train or test partition".into()));
    }
    let ds = &set.dataset;
    let (x, names) = ds.select(&combo.groups(config.model));
    let (fit_rows, valid_rows) = if config.model == ModelKind::Lr {
        (fold.train.clone(), Vec::new())
    } else {
        inner_validation(&fold.train, inner_valid_fraction)
    };
    let images = if combo.uses_images() {
        let all = set
            .images
            .as_ref()
            .ok_or_else(|| Error::Contract(format!("`{combo}` needs trajectory images")))?;
        let train_imgs: Vec<TrajImage> = fold.train.iter().map(|&i| all[i].clone()).collect();
        let scaler = fit_scaler(&train_imgs, set.scaler_mode)?;
        Some(image_matrix(all, &scaler))
    } else {
        None
    };

    let (fx, fy) = (rows_of(&x, &fit_rows), rows_of(&ds.y, &fit_rows));
    let fimg = images.as_ref().map(|m| rows_of(m, &fit_rows));
    let (vx, vy) = (rows_of(&x, &valid_rows), rows_of(&ds.y, &valid_rows));
    let vimg = images.as_ref().map(|m| rows_of(m, &valid_rows));
    let mut train = TrainData::new(fx.view(), fy.view());
    let mut valid = TrainData::new(vx.view(), vy.view());
    if let (Some(f), Some(v)) = (&fimg, &vimg) {
        train = train.with_images(f.view());
        valid = valid.with_images(v.view());
    }
    let (model, log) = train_model(config, train, (!valid_rows.is_empty()).then_some(valid))?;

    let tx = rows_of(&x, &fold.test);
    let timg = images.as_ref().map(|m| rows_of(m, &fold.test));
    let predictions = model.predict_delay(tx.view(), timg.as_ref().map(|m| m.view()))?;
    let truth: Vec<f64> = fold.test.iter().map(|&i| ds.target()[i]).collect();
    Ok(CellOutcome {
        rmse: rmse(&predictions, &truth)?,
        mae: mae(&predictions, &truth)?,
        predictions,
        model: ModelFile::new(config.clone(), names, model),
        log,
        n_train: fold.train.len(),
        n_test: fold.test.len(),
    })
}

/// One row of a comparison grid. Metrics are `None` for combinations the
/// model cannot use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub model: ModelKind,
    pub features: FeatureCombo,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub config_hash: String,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultGrid {
    pub cells: Vec<GridCell>,
}

impl ResultGrid {
    pub fn get(&self, model: ModelKind, features: FeatureCombo) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.model == model && c.features == features)
    }

    pub fn rmse(&self, model: ModelKind, features: FeatureCombo) -> Option<f64> {
        self.get(model, features).and_then(|c| c.rmse)
    }
}

/// Evaluates every (model, combo) pair on `fold`, in parallel. Pairs the
/// model cannot use are kept as not-applicable cells. The returned models
/// line up with `grid.cells`.
pub fn run_comparison(
    set: &EvalSet,
    fold: &Fold,
    models: &[ModelKind],
    combos: &[FeatureCombo],
    config: &EvalConfig,
) -> Result<(ResultGrid, Vec<Option<ModelFile>>)> {
    let pairs: Vec<(ModelKind, FeatureCombo)> = models
        .iter()
        .flat_map(|&m| combos.iter().map(move |&c| (m, c)))
        .collect();
    let runs: Vec<(GridCell, Option<ModelFile>)> = pairs
        .par_iter()
        .map(|&(model, combo)| {
            let tc = config.cell_config(model, combo);
            let mut cell = GridCell {
                model,
                features: combo,
                rmse: None,
                mae: None,
                n_train: fold.train.len(),
                n_test: fold.test.len(),
                seed: tc.seed,
                config_hash: config_hash(&tc)?,
                runtime_s: 0.0,
            };
            if !combo.applies_to(model) {
                return Ok((cell, None));
            }
            let start = Instant::now();
            let out = evaluate_cell(set, fold, &tc, combo, config.inner_valid_fraction)?;
            cell.runtime_s = start.elapsed().as_secs_f64();
            cell.rmse = Some(out.rmse);
            cell.mae = Some(out.mae);
            tracing::info!(model = %model, features = %combo, rmse = out.rmse, "cell done");
            Ok((cell, Some(out.model)))
        })
        .collect::<Result<_>>()?;
    let (cells, files) = runs.into_iter().unzip();
    Ok((ResultGrid { cells }, files))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_rmse: Vec<f64>,
    pub fold_mae: Vec<f64>,
    pub mean_rmse: f64,
    pub mean_mae: f64,
}

/// Scores one (model, combo) on every fold of `plan`.
pub fn cross_validate(set: &EvalSet, plan: &SplitPlan, model: ModelKind, combo: FeatureCombo, config: &EvalConfig) -> Result<CvResult> {
    if plan.folds.is_empty() {
        return Err(Error::Contract("split plan has no folds".into()));
    }
    let tc = config.cell_config(model, combo);
    let outs: Vec<(f64, f64)> = plan
        .folds
        .par_iter()
        .map(|f| evaluate_cell(set, f, &tc, combo, config.inner_valid_fraction).map(|o| (o.rmse, o.mae)))
        .collect::<Result<_>>()?;
    let k = outs.len() as f64;
    let (fold_rmse, fold_mae): (Vec<f64>, Vec<f64>) = outs.into_iter().unzip();
    Ok(CvResult {
        mean_rmse: fold_rmse.iter().sum::<f64>() / k,
        mean_mae: fold_mae.iter().sum::<f64>() / k,
        fold_rmse,
        fold_mae,
    })
}
