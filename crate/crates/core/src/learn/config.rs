//! Training hyper-parameters with defaults taken from the best published
//! configurations.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Mlp,
    Gbdt,
    #[serde(rename = "trajcnn")]
    TrajCnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lr, ModelKind::Mlp, ModelKind::Gbdt, ModelKind::TrajCnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Mlp => "mlp",
            ModelKind::Gbdt => "gbdt",
            ModelKind::TrajCnn => "trajcnn",
        }
    }

    /// Whether the model reads weather as principal components rather than
    /// the raw encoding.
    pub fn uses_weather_pca(self) -> bool {
        matches!(self, ModelKind::Lr | ModelKind::Gbdt)
    }

    pub fn needs_images(self) -> bool {
        self == ModelKind::TrajCnn
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown model `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub num_leaves: usize,
    pub min_data_in_leaf: usize,
    pub max_bins: usize,
    /// Rounds without validation improvement before stopping.
    pub patience: usize,
    /// Derive one child's histogram from its parent and sibling.
    pub histogram_subtraction: bool,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            learning_rate: 0.01,
            n_estimators: 16000,
            num_leaves: 39,
            min_data_in_leaf: 20,
            max_bins: 255,
            patience: 200,
            histogram_subtraction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub n_epoch: usize,
    pub patience: usize,
    pub n_layer: usize,
    pub n_node: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            n_epoch: 3000,
            patience: 50,
            n_layer: 2,
            n_node: 1553,
            learning_rate: 0.00976563,
            batch_size: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub n_fc_layer: usize,
    pub n_fc: usize,
    pub n_conv_layer: usize,
    /// Filters per convolutional block.
    pub n_conv: usize,
    pub batch_size: usize,
    pub n_epoch: usize,
    pub patience: usize,
    pub learning_rate: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            n_fc_layer: 1,
            n_fc: 429,
            n_conv_layer: 2,
            n_conv: 1,
            batch_size: 15,
            n_epoch: 200,
            patience: 20,
            learning_rate: 3.48981e-05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub seed: u64,
    pub gbdt: GbdtConfig,
    pub mlp: MlpConfig,
    pub trajcnn: CnnConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::Gbdt,
            seed: 0,
            gbdt: GbdtConfig::default(),
            mlp: MlpConfig::default(),
            trajcnn: CnnConfig::default(),
        }
    }
}

fn positive(name: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive")))
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.gbdt;
        positive("gbdt.learning_rate", g.learning_rate > 0.0 && g.learning_rate.is_finite())?;
        positive("gbdt.num_leaves", g.num_leaves >= 2)?;
        positive("gbdt.min_data_in_leaf", g.min_data_in_leaf >= 1)?;
        positive("gbdt.max_bins", g.max_bins >= 2)?;
        positive("gbdt.patience", g.patience >= 1)?;
        let m = &self.mlp;
        positive("mlp.n_epoch", m.n_epoch >= 1)?;
        positive("mlp.patience", m.patience >= 1)?;
        positive("mlp.n_node", m.n_node >= 1)?;
        positive("mlp.batch_size", m.batch_size >= 1)?;
        positive("mlp.learning_rate", m.learning_rate > 0.0)?;
        let c = &self.trajcnn;
        positive("trajcnn.n_fc", c.n_fc >= 1)?;
        positive("trajcnn.n_conv_layer", (1..=4).contains(&c.n_conv_layer))?;
        positive("trajcnn.n_conv", c.n_conv >= 1)?;
        positive("trajcnn.batch_size", c.batch_size >= 1)?;
        positive("trajcnn.n_epoch", c.n_epoch >= 1)?;
        positive("trajcnn.patience", c.patience >= 1)?;
        positive("trajcnn.learning_rate", c.learning_rate > 0.0)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<TrainConfig> {
        let c: TrainConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}
