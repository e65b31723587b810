//! Jitter removal and motion backfill for a single vehicle's GPS stream.

use crate::geo::{haversine_m, initial_bearing, BoundingBox};
use crate::{Error, Result};

use super::GpsPoint;

/// Ground speed implied by moving from `a` to `b`, in m/s. Coincident
/// timestamps give 0 for identical positions and infinity otherwise.
pub fn implied_speed(a: &GpsPoint, b: &GpsPoint) -> f64 {
    let d = haversine_m(a.latitude, a.longitude, b.latitude, b.longitude);
    let dt = (b.time - a.time).num_milliseconds() as f64 / 1000.0;
    if dt <= 0.0 {
        if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        d / dt
    }
}

fn check_stream(points: &[GpsPoint]) -> Result<()> {
    if let Some(first) = points.first() {
        if let Some(p) = points.iter().find(|p| p.vehicle_id != first.vehicle_id) {
            return Err(Error::Contract(format!(
                "mixed vehicles in one stream: {} and {}",
                first.vehicle_id, p.vehicle_id
            )));
        }
    }
    if let Some(w) = points.windows(2).find(|w| w[1].time < w[0].time) {
        return Err(Error::Contract(format!(
            "points of {} not sorted by time at {}",
            w[0].vehicle_id, w[1].time
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanOutcome {
    pub points: Vec<GpsPoint>,
    pub removed_outside: usize,
    pub removed_speed: usize,
}

/// Drops points outside `bbox`, then greedily drops every point whose implied
/// speed from the last retained point exceeds `v_max` (m/s).
pub fn clean_trajectory(points: &[GpsPoint], v_max: f64, bbox: &BoundingBox) -> Result<CleanOutcome> {
    check_stream(points)?;
    if !(v_max > 0.0) {
        return Err(Error::Parameter(format!("v_max must be positive, got {v_max}")));
    }
    let mut out = CleanOutcome::default();
    for p in points {
        if !bbox.contains(p.latitude, p.longitude) {
            out.removed_outside += 1;
            continue;
        }
        if let Some(last) = out.points.last() {
            if implied_speed(last, p) > v_max {
                out.removed_speed += 1;
                continue;
            }
        }
        out.points.push(p.clone());
    }
    Ok(out)
}

/// Which points get speed/heading recomputed from consecutive fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MotionFill {
    /// Only fill points whose speed or heading is missing.
    #[default]
    MissingOnly,
    /// Overwrite reported values everywhere.
    All,
}

/// Backfills speed (haversine distance over elapsed time) and heading
/// (initial great-circle bearing) from each point to its successor; the last
/// point inherits the final gap's values. Later points sharing a timestamp
/// with their predecessor are dropped; the returned count says how many.
pub fn compute_speeds(points: &[GpsPoint], fill: MotionFill) -> Result<(Vec<GpsPoint>, usize)> {
    check_stream(points)?;
    let mut kept: Vec<GpsPoint> = Vec::with_capacity(points.len());
    let mut duplicates = 0;
    for p in points {
        if kept.last().is_some_and(|l| l.time == p.time) {
            duplicates += 1;
        } else {
            kept.push(p.clone());
        }
    }
    let n = kept.len();
    let mut gaps: Vec<(f64, f64)> = Vec::with_capacity(n.saturating_sub(1));
    let mut last_heading = 0.0;
    for w in kept.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let d = haversine_m(a.latitude, a.longitude, b.latitude, b.longitude);
        let dt = (b.time - a.time).num_milliseconds() as f64 / 1000.0;
        let heading = if d > 0.0 {
            initial_bearing(a.latitude, a.longitude, b.latitude, b.longitude)
        } else {
            last_heading
        };
        last_heading = heading;
        gaps.push((d / dt, heading));
    }
    for (i, p) in kept.iter_mut().enumerate() {
        let (speed, heading) = match gaps.get(i).or(gaps.last()) {
            Some(&g) => g,
            None => (0.0, 0.0),
        };
        match fill {
            MotionFill::All => {
                p.speed = Some(speed);
                p.heading = Some(heading);
            }
            MotionFill::MissingOnly => {
                p.speed.get_or_insert(speed);
                p.heading.get_or_insert(heading);
            }
        }
    }
    if duplicates > 0 {
        tracing::debug!(duplicates, "dropped duplicate timestamps");
    }
    Ok((kept, duplicates))
}
