//! Hourly airport weather observations.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::gps::Parsed;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub time: DateTime<Utc>,
    pub temperature_f: f64,
    pub dew_point_f: f64,
    pub humidity_pct: f64,
    /// Compass point such as `WSW`, or `CALM` / `VAR`.
    pub wind_direction: String,
    pub wind_speed_mph: f64,
    pub wind_gust_mph: f64,
    pub pressure_inhg: f64,
    pub condition: String,
}

pub const WEATHER_COLUMNS: &[&str] = &[
    "time",
    "temperature_f",
    "dew_point_f",
    "humidity_pct",
    "wind_direction",
    "wind_speed_mph",
    "wind_gust_mph",
    "pressure_inhg",
    "condition",
];

impl WeatherRecord {
    pub fn is_valid(&self) -> bool {
        (0.0..=100.0).contains(&self.humidity_pct)
            && self.wind_speed_mph >= 0.0
            && self.wind_gust_mph >= 0.0
            && [self.temperature_f, self.dew_point_f, self.pressure_inhg]
                .iter()
                .all(|v| v.is_finite())
    }
}

pub fn parse_weather<R: Read>(reader: R) -> Result<Parsed<WeatherRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    super::require_columns(&mut rdr, WEATHER_COLUMNS)?;
    let mut out = Parsed::default();
    for row in rdr.deserialize::<WeatherRecord>() {
        match row {
            Ok(r) if r.is_valid() => out.records.push(r),
            Ok(_) => out.skipped += 1,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => out.skipped += 1,
        }
    }
    out.records.sort_by_key(|r| r.time);
    Ok(out)
}

pub fn write_weather<W: Write>(writer: W, records: &[WeatherRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(WEATHER_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

/// Index of the most recent record at or before `t` in a time-sorted slice.
pub fn latest_at_or_before(records: &[WeatherRecord], t: DateTime<Utc>) -> Option<usize> {
    let n = records.partition_point(|r| r.time <= t);
    n.checked_sub(1)
}
