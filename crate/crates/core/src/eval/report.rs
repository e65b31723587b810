//! CSV result grids, the long-format plot table and the run manifest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;

use super::{Importance, ResultGrid, SweepCell};
use crate::Result;

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(value)?.as_bytes()))
}

/// Child seed for a named job, stable across platforms and releases.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

/// `model,features,rmse,mae,n_train,n_test`; not-applicable cells read `NA`.
pub fn write_grid_csv<W: Write>(w: W, grid: &ResultGrid) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["model", "features", "rmse", "mae", "n_train", "n_test"])?;
    for c in &grid.cells {
        out.write_record([
            c.model.to_string(),
            c.features.to_string(),
            metric(c.rmse),
            metric(c.mae),
            c.n_train.to_string(),
            c.n_test.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(w: W, cells: &[SweepCell]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["observation_min", "gap_min", "rmse", "mae", "n_test"])?;
    for c in cells {
        out.write_record([
            c.observation_min.to_string(),
            c.gap_min.to_string(),
            c.rmse.to_string(),
            c.mae.to_string(),
            c.n_test.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_importance_csv<W: Write>(w: W, ranked: &[Importance]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rank", "feature", "index", "splits"])?;
    for (r, i) in ranked.iter().enumerate() {
        out.write_record([(r + 1).to_string(), i.feature.clone(), i.index.to_string(), i.splits.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// One observation of the tidy plot table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub experiment: String,
    pub model: String,
    pub features: String,
    pub observation_min: Option<i64>,
    pub gap_min: Option<i64>,
    pub metric: String,
    pub value: f64,
}

pub fn grid_plot_rows(grid: &ResultGrid, observation_min: i64, gap_min: i64) -> Vec<PlotRow> {
    let mut rows = Vec::new();
    for c in &grid.cells {
        for (name, v) in [("rmse", c.rmse), ("mae", c.mae)] {
            if let Some(value) = v {
                rows.push(PlotRow {
                    experiment: "comparison".into(),
                    model: c.model.to_string(),
                    features: c.features.to_string(),
                    observation_min: Some(observation_min),
                    gap_min: Some(gap_min),
                    metric: name.into(),
                    value,
                });
            }
        }
    }
    rows
}

pub fn sweep_plot_rows(cells: &[SweepCell], model: &str, features: &str) -> Vec<PlotRow> {
    cells
        .iter()
        .flat_map(|c| {
            [("rmse", c.rmse), ("mae", c.mae)].map(|(name, value)| PlotRow {
                experiment: "sweep".into(),
                model: model.into(),
                features: features.into(),
                observation_min: Some(c.observation_min),
                gap_min: Some(c.gap_min),
                metric: name.into(),
                value,
            })
        })
        .collect()
}

pub fn write_plot_data<W: Write>(w: W, rows: &[PlotRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Provenance of one job in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub job: String,
    pub seed: u64,
    pub config_hash: String,
    pub runtime_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub command: String,
    pub master_seed: u64,
    pub config_hash: String,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new<T: Serialize>(command: &str, master_seed: u64, config: &T) -> Result<Manifest> {
        Ok(Manifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            master_seed,
            config_hash: config_hash(config)?,
            entries: Vec::new(),
        })
    }

    pub fn add_grid(&mut self, grid: &ResultGrid, outputs: &[String]) {
        for c in &grid.cells {
            self.entries.push(ManifestEntry {
                job: format!("{}/{}", c.model, c.features),
                seed: c.seed,
                config_hash: c.config_hash.clone(),
                runtime_s: c.runtime_s,
                outputs: outputs.to_vec(),
            });
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
