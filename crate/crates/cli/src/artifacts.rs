//! File names shared between stages and small I/O helpers.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use flightdelay::synth::{GPS_FILE as GPS, SCHEDULE_FILE as SCHEDULE, WEATHER_FILE as WEATHER};

pub const ZONES: &str = "zones.json";
pub const SYNTH_REPORT: &str = "synth_report.json";
pub const CLEAN_GPS: &str = "clean_gps.csv";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const FEATURES: &str = "features.csv";
pub const FEATURES_SCHEMA: &str = "features.schema.json";
pub const IMAGES: &str = "images.bin";
pub const IMAGES_INDEX: &str = "images.index.json";
pub const FEATURIZE_REPORT: &str = "featurize.json";
pub const MODELS_DIR: &str = "models";
pub const GRID: &str = "grid.csv";
pub const CV: &str = "cv.csv";
pub const MANIFEST: &str = "manifest.json";
pub const PLOT_DATA: &str = "plot_data.csv";
pub const SWEEP: &str = "sweep.csv";
pub const SWEEP_PLOT_DATA: &str = "sweep_plot_data.csv";
pub const IMPORTANCE: &str = "importance.csv";
pub const ANALYSIS: &str = "analysis.json";
pub const EXPLAIN: &str = "explain.csv";

/// Path of an artifact an earlier stage should have written.
pub fn require(dir: &Path, name: &str, producer: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if !path.is_file() {
        bail!(
            "missing artifact {} (run `flightdelay {producer}` first)",
            path.display()
        );
    }
    Ok(path)
}

pub fn model_path(dir: &Path, model: impl std::fmt::Display, combo: impl std::fmt::Display) -> PathBuf {
    dir.join(MODELS_DIR).join(format!("{model}_{combo}.json"))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Reads an optional JSON config, falling back to the type's default.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}
