//! One entry point for fitting and applying any of the four models.

use ndarray::ArrayView2;

use super::{
    fit_gbdt, fit_linreg, fit_mlp, fit_trajcnn, CnnData, GbdtLog, ModelKind, TrainConfig, TrainedModel, TrainingLog,
};
use crate::ingest::LabelVector;
use crate::{Error, Result};

/// Feature rows, six-column targets and, for TrajCNN, scaled image rows.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: ArrayView2<'a, f64>,
    pub images: Option<ArrayView2<'a, f64>>,
}

impl<'a> TrainData<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: ArrayView2<'a, f64>) -> TrainData<'a> {
        TrainData { x, y, images: None }
    }

    pub fn with_images(mut self, images: ArrayView2<'a, f64>) -> TrainData<'a> {
        self.images = Some(images);
        self
    }

    fn total(&self) -> Vec<f64> {
        self.y.column(LabelVector::TOTAL).to_vec()
    }

    fn images(&self, kind: ModelKind) -> Result<ArrayView2<'a, f64>> {
        self.images
            .ok_or_else(|| Error::Contract(format!("{kind} needs trajectory images")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitLog {
    Closed,
    Neural(TrainingLog),
    Boosting(GbdtLog),
}

/// Fits `config.model`. `valid`, when given, drives early stopping.
pub fn train_model(config: &TrainConfig, train: TrainData<'_>, valid: Option<TrainData<'_>>) -> Result<(TrainedModel, FitLog)> {
    config.validate()?;
    if train.y.ncols() != LabelVector::NAMES.len() {
        return Err(Error::Dimension {
            expected: LabelVector::NAMES.len(),
            got: train.y.ncols(),
        });
    }
    match config.model {
        ModelKind::Lr => {
            let m = fit_linreg(train.x, train.y.column(LabelVector::TOTAL))?;
            Ok((TrainedModel::Lr(m), FitLog::Closed))
        }
        ModelKind::Mlp => {
            let (m, log) = fit_mlp(train.x, train.y, valid.map(|v| (v.x, v.y)), &config.mlp, config.seed)?;
            Ok((TrainedModel::Mlp(m), FitLog::Neural(log)))
        }
        ModelKind::Gbdt => {
            let y = train.total();
            let vy = valid.map(|v| v.total());
            let vpair = valid.zip(vy.as_deref()).map(|(v, y)| (v.x, y));
            let (m, log) = fit_gbdt(train.x, &y, vpair, &config.gbdt)?;
            Ok((TrainedModel::Gbdt(m), FitLog::Boosting(log)))
        }
        ModelKind::TrajCnn => {
            let data = CnnData {
                images: train.images(config.model)?,
                x: train.x,
                y: train.y,
            };
            let vdata = match valid {
                Some(v) => Some(CnnData {
                    images: v.images(config.model)?,
                    x: v.x,
                    y: v.y,
                }),
                None => None,
            };
            let (m, log) = fit_trajcnn(data, vdata, &config.trajcnn, config.seed)?;
            Ok((TrainedModel::TrajCnn(m), FitLog::Neural(log)))
        }
    }
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Lr(_) => ModelKind::Lr,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
            TrainedModel::Gbdt(_) => ModelKind::Gbdt,
            TrainedModel::TrajCnn(_) => ModelKind::TrajCnn,
        }
    }

    /// Predicted departure delay in minutes for each row.
    pub fn predict_delay(&self, x: ArrayView2<f64>, images: Option<ArrayView2<f64>>) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Lr(m) => m.predict(x),
            TrainedModel::Gbdt(m) => m.predict(x),
            TrainedModel::Mlp(m) => Ok(m.predict(x)?.column(LabelVector::TOTAL).to_vec()),
            TrainedModel::TrajCnn(m) => {
                let img = images.ok_or_else(|| Error::Contract("trajcnn needs trajectory images".into()))?;
                Ok(m.predict(img, x)?.column(LabelVector::TOTAL).to_vec())
            }
        }
    }
}
