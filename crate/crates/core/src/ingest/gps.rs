//! GPS surface-movement observations and their CSV wire format.
//!
//! Header: `vehicle_id,time_iso8601,lat,lon,speed_mps,heading_deg`. Headings
//! are degrees on disk and radians in memory. Speed and heading cells may be
//! empty; [`super::compute_speeds`] backfills them from consecutive fixes.

use chrono::{DateTime, NaiveDateTime, Utc};
use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::geo::normalize_bearing;
use crate::{Error, Result};

pub const GPS_HEADER: [&str; 6] = ["vehicle_id", "time_iso8601", "lat", "lon", "speed_mps", "heading_deg"];

/// One surface position report.
#[derive(Debug, Clone, PartialEq)]
pub struct GpsPoint {
    /// Call sign or other opaque vehicle identifier.
    pub vehicle_id: String,
    pub time: DateTime<Utc>,
    pub latitude: f64,
    pub longitude: f64,
    /// Ground speed in m/s, if reported.
    pub speed: Option<f64>,
    /// Compass bearing in radians, `[0, 2π)`, 0 = North, clockwise.
    pub heading: Option<f64>,
}

impl GpsPoint {
    pub fn is_valid(&self) -> bool {
        !self.vehicle_id.is_empty()
            && (-90.0..=90.0).contains(&self.latitude)
            && (-180.0..=180.0).contains(&self.longitude)
            && self.speed.is_none_or(|s| s.is_finite() && s >= 0.0)
            && self.heading.is_none_or(|h| h.is_finite() && (0.0..2.0 * PI).contains(&h))
    }

    /// Speed with missing values treated as stationary.
    pub fn speed_or_zero(&self) -> f64 {
        self.speed.unwrap_or(0.0)
    }

    /// Velocity as (east, north) components in m/s.
    pub fn velocity(&self) -> (f64, f64) {
        let s = self.speed_or_zero();
        let h = self.heading.unwrap_or(0.0);
        (s * h.sin(), s * h.cos())
    }
}

/// Output of a tolerant parse: the valid rows plus a count of rejected ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub skipped: usize,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed {
            records: Vec::new(),
            skipped: 0,
        }
    }
}

pub(crate) fn parse_time(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    // A bare timestamp without offset is taken to be UTC already.
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
        .map(|n| n.and_utc())
}

pub(crate) fn format_time(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub(crate) fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))
}

fn parse_optional(cell: Option<&str>) -> std::result::Result<Option<f64>, ()> {
    match cell.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse::<f64>().map(Some).map_err(|_| ()),
    }
}

fn parse_row(rec: &csv::StringRecord, idx: &[usize; 6]) -> Option<GpsPoint> {
    let vehicle_id = rec.get(idx[0])?.trim().to_string();
    let time = parse_time(rec.get(idx[1])?)?;
    let latitude: f64 = rec.get(idx[2])?.trim().parse().ok()?;
    let longitude: f64 = rec.get(idx[3])?.trim().parse().ok()?;
    let speed = parse_optional(rec.get(idx[4])).ok()?;
    let heading_deg = parse_optional(rec.get(idx[5])).ok()?;
    if let Some(h) = heading_deg {
        if !(0.0..360.0).contains(&h) {
            return None;
        }
    }
    let p = GpsPoint {
        vehicle_id,
        time,
        latitude,
        longitude,
        speed,
        heading: heading_deg.map(|h| normalize_bearing(h.to_radians())),
    };
    p.is_valid().then_some(p)
}

/// Parses the GPS CSV format. Malformed or out-of-range rows are skipped and
/// counted; a missing column is a schema error.
pub fn parse_gps<R: Read>(reader: R) -> Result<Parsed<GpsPoint>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(GPS_HEADER) {
        *slot = column_index(&headers, name)?;
    }
    let mut out = Parsed::default();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        match parse_row(&rec, &idx) {
            Some(p) => out.records.push(p),
            None => out.skipped += 1,
        }
    }
    if out.skipped > 0 {
        tracing::warn!(skipped = out.skipped, "skipped malformed GPS rows");
    }
    Ok(out)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes points in the GPS CSV format.
pub fn write_gps<W: Write>(writer: W, points: &[GpsPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(GPS_HEADER)?;
    for p in points {
        w.write_record([
            p.vehicle_id.clone(),
            format_time(&p.time),
            p.latitude.to_string(),
            p.longitude.to_string(),
            opt_cell(p.speed),
            opt_cell(p.heading.map(f64::to_degrees)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
