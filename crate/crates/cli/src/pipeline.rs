//! `pipeline`: every stage in order, driven by one JSON file.

use std::path::Path;

use anyhow::{Context, Result};
use flightdelay::eval::{EvalConfig, FeatureCombo, DEFAULT_GAPS, DEFAULT_LENGTHS};
use flightdelay::features::FeatureConfig;
use flightdelay::ingest::CleaningConfig;
use flightdelay::learn::ModelKind;
use flightdelay::synth::ScenarioConfig;
use serde::{Deserialize, Serialize};

use crate::artifacts::write_json;
use crate::stages::{self, EvalOptions, SweepOptions, DEFAULT_TEST_FRACTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub lengths: Vec<i64>,
    pub gaps: Vec<i64>,
    pub model: ModelKind,
    pub features: FeatureCombo,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            lengths: DEFAULT_LENGTHS.to_vec(),
            gaps: DEFAULT_GAPS.to_vec(),
            model: ModelKind::Gbdt,
            features: FeatureCombo::RefWAtc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed for generation and training; overrides the seeds inside
    /// `scenario` and `eval.train`.
    pub seed: Option<u64>,
    pub scenario: ScenarioConfig,
    pub cleaning: CleaningConfig,
    /// `airport` is taken from the scenario.
    pub features: FeatureConfig,
    pub eval: EvalConfig,
    pub models: Vec<ModelKind>,
    pub combos: Vec<FeatureCombo>,
    pub test_fraction: f64,
    pub cv_folds: Option<usize>,
    pub plot_data: bool,
    /// GBDT feature set whose split counts are ranked.
    pub importance: Option<FeatureCombo>,
    pub sweep: Option<SweepSettings>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: None,
            scenario: ScenarioConfig::default(),
            cleaning: CleaningConfig::default(),
            features: FeatureConfig::default(),
            eval: EvalConfig::default(),
            models: ModelKind::ALL.to_vec(),
            combos: vec![
                FeatureCombo::Ref,
                FeatureCombo::RefW,
                FeatureCombo::RefAtc,
                FeatureCombo::RefWAtc,
                FeatureCombo::RefImg,
                FeatureCombo::RefWImg,
            ],
            test_fraction: DEFAULT_TEST_FRACTION,
            cv_folds: None,
            plot_data: true,
            importance: Some(FeatureCombo::RefWAtc),
            sweep: None,
        }
    }
}

impl PipelineConfig {
    /// Applies the master seed and airport to the stage configs.
    pub fn resolved(mut self, seed: Option<u64>) -> PipelineConfig {
        if let Some(s) = seed.or(self.seed) {
            self.seed = Some(s);
            self.scenario.seed = s;
            self.eval.train.seed = s;
        }
        self.features.airport = self.scenario.airport.clone();
        self
    }
}

pub fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(config_path).with_context(|| format!("reading {}", config_path.display()))?;
    let config: PipelineConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", config_path.display()))?;
    let config = config.resolved(seed);
    config.eval.train.validate()?;
    std::fs::create_dir_all(out)?;
    write_json(&out.join("pipeline.resolved.json"), &config)?;

    tracing::info!("stage 1/6: synth");
    stages::generate(out, config.scenario.clone())?;
    tracing::info!("stage 2/6: ingest");
    stages::ingest_with(out, out, None, config.cleaning)?;
    tracing::info!("stage 3/6: featurize");
    stages::featurize_with(out, config.features.clone())?;
    tracing::info!("stage 4/6: eval");
    let opts = EvalOptions {
        models: config.models.clone(),
        combos: config.combos.clone(),
        cv: config.cv_folds,
        plot_data: config.plot_data,
        test_fraction: config.test_fraction,
    };
    stages::eval(out, &config.eval, &opts)?;
    tracing::info!("stage 5/6: importance");
    if let Some(combo) = config.importance {
        stages::importance(out, None, combo)?;
    }
    tracing::info!("stage 6/6: sweep and analysis");
    if let Some(s) = &config.sweep {
        let opts = SweepOptions {
            lengths: s.lengths.clone(),
            gaps: s.gaps.clone(),
            model: s.model,
            features: s.features,
            plot_data: config.plot_data,
        };
        stages::sweep(out, &config.eval, &opts)?;
    }
    stages::analyze(out, &config.scenario.airport)?;
    Ok(())
}
