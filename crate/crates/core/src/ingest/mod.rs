//! Parsing of the three input sources and trajectory reconstruction.

mod clean;
mod gps;
mod schedule;
mod segment;
mod weather;

pub use clean::{clean_trajectory, compute_speeds, implied_speed, CleanOutcome, MotionFill};
pub use gps::{parse_gps, write_gps, GpsPoint, Parsed, GPS_HEADER};
pub use schedule::{
    match_arrival_leg, parse_schedule, write_schedule, DelayBreakdown, FlightRecord, LabelVector, SCHEDULE_COLUMNS,
};
pub use segment::{segment_trajectories, Trajectory};
pub use weather::{latest_at_or_before, parse_weather, write_weather, WeatherRecord, WEATHER_COLUMNS};

pub(crate) use gps::{format_time, parse_time};
#[cfg(test)]
pub(crate) use schedule::tests::record as test_record;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;

use crate::geo::BoundingBox;
use crate::{Error, Result};

pub(crate) fn require_columns<R: Read>(rdr: &mut csv::Reader<R>, columns: &[&str]) -> Result<()> {
    let headers = rdr.headers()?.clone();
    for c in columns {
        gps::column_index(&headers, c)?;
    }
    Ok(())
}

/// Thresholds for trajectory reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleaningConfig {
    /// Maximum plausible ground speed in m/s.
    pub v_max: f64,
    /// Largest time gap, in seconds, inside one trajectory.
    pub gap_threshold_s: i64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            v_max: 150.0,
            gap_threshold_s: 1800,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_points: usize,
    pub removed_outside_bbox: usize,
    pub removed_speed_outliers: usize,
    pub duplicate_timestamps: usize,
    pub retained_points: usize,
    pub trajectories: usize,
    pub vehicles: usize,
}

/// Cleans every vehicle's stream, backfills missing motion and segments the
/// result into per-date trajectories.
pub fn reconstruct_trajectories(
    points: Vec<GpsPoint>,
    bbox: &BoundingBox,
    config: &CleaningConfig,
) -> Result<(Vec<Trajectory>, CleaningReport)> {
    if config.gap_threshold_s <= 0 {
        return Err(Error::Parameter("gap_threshold_s must be positive".into()));
    }
    let mut report = CleaningReport {
        input_points: points.len(),
        ..Default::default()
    };
    let mut by_vehicle: BTreeMap<String, Vec<GpsPoint>> = BTreeMap::new();
    for p in points {
        by_vehicle.entry(p.vehicle_id.clone()).or_default().push(p);
    }
    report.vehicles = by_vehicle.len();
    let streams: Vec<Vec<GpsPoint>> = by_vehicle
        .into_values()
        .map(|mut v| {
            v.sort_by_key(|p| p.time);
            v
        })
        .collect();
    let cleaned: Vec<(CleanOutcome, Vec<GpsPoint>, usize)> = streams
        .par_iter()
        .map(|s| {
            let outcome = clean_trajectory(s, config.v_max, bbox)?;
            let (pts, dups) = compute_speeds(&outcome.points, MotionFill::MissingOnly)?;
            Ok((outcome, pts, dups))
        })
        .collect::<Result<_>>()?;
    let mut retained = Vec::new();
    for (outcome, pts, dups) in cleaned {
        report.removed_outside_bbox += outcome.removed_outside;
        report.removed_speed_outliers += outcome.removed_speed;
        report.duplicate_timestamps += dups;
        retained.extend(pts);
    }
    report.retained_points = retained.len();
    let trajectories = segment_trajectories(retained, config.gap_threshold_s);
    report.trajectories = trajectories.len();
    Ok((trajectories, report))
}
