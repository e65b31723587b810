//! Observation-length × prediction-gap sweep.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::{evaluate_cell, temporal_holdout, EvalConfig, EvalSet, FeatureCombo};
use crate::learn::ModelKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub observation_min: i64,
    pub gap_min: i64,
    pub rmse: f64,
    pub mae: f64,
    pub n_test: usize,
    pub runtime_s: f64,
}

/// Settings of a sweep besides the grid axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub features: FeatureCombo,
    pub test_fraction: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            model: ModelKind::Gbdt,
            features: FeatureCombo::RefWAtc,
            test_fraction: 2.0 / 7.0,
        }
    }
}

pub const DEFAULT_LENGTHS: [i64; 3] = [30, 60, 120];
pub const DEFAULT_GAPS: [i64; 3] = [60, 120, 240];

/// Rebuilds the features with `build(length, gap)` for every grid point and
/// scores `spec.model` on a temporal holdout. Cells are in length-major
/// order.
pub fn sweep_window_gap<B>(
    lengths: &[i64],
    gaps: &[i64],
    mut build: B,
    spec: &SweepSpec,
    config: &EvalConfig,
) -> Result<Vec<SweepCell>>
where
    B: FnMut(i64, i64) -> Result<EvalSet>,
{
    if lengths.is_empty() || gaps.is_empty() {
        return Err(Error::Parameter("sweep needs at least one length and one gap".into()));
    }
    let tc = config.cell_config(spec.model, spec.features);
    let mut cells = Vec::with_capacity(lengths.len() * gaps.len());
    for &observation_min in lengths {
        for &gap_min in gaps {
            let start = Instant::now();
            let set = build(observation_min, gap_min)?;
            let plan = temporal_holdout(&set.dataset.timestamps, spec.test_fraction)?;
            let out = evaluate_cell(&set, &plan.folds[0], &tc, spec.features, config.inner_valid_fraction)?;
            tracing::info!(observation_min, gap_min, rmse = out.rmse, "sweep cell done");
            cells.push(SweepCell {
                observation_min,
                gap_min,
                rmse: out.rmse,
                mae: out.mae,
                n_test: out.n_test,
                runtime_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(cells)
}

/// Parses a comma-separated list of minutes such as `30,60,120`.
pub fn parse_minutes(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parameter(format!("`{t}` is not a whole number of minutes")))
        })
        .collect()
}
