//! Tarmac partition into apron, runway and parking areas.
//!
//! Polygons are treated as planar in (longitude, latitude), which is accurate
//! enough at the scale of one airport. Boundary points count as inside, and
//! overlapping zones are resolved by their order in the map.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::geo::BoundingBox;
use crate::ingest::{GpsPoint, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ZoneLabel {
    Apron,
    Runway,
    /// Slow-moving area (cargo stands); also called the patrolling area.
    Parking,
}

impl ZoneLabel {
    pub const ALL: [ZoneLabel; 3] = [ZoneLabel::Apron, ZoneLabel::Runway, ZoneLabel::Parking];

    pub fn index(self) -> usize {
        match self {
            ZoneLabel::Apron => 0,
            ZoneLabel::Runway => 1,
            ZoneLabel::Parking => 2,
        }
    }
}

impl fmt::Display for ZoneLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ZoneLabel::Apron => "Apron",
            ZoneLabel::Runway => "Runway",
            ZoneLabel::Parking => "Parking",
        };
        f.write_str(s)
    }
}

impl FromStr for ZoneLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Apron" => Ok(ZoneLabel::Apron),
            "Runway" => Ok(ZoneLabel::Runway),
            "Parking" | "Patrol" | "Patrolling" => Ok(ZoneLabel::Parking),
            other => Err(Error::Schema(format!("unknown zone label `{other}`"))),
        }
    }
}

/// A simple polygon with vertices as `[lat, lon]`, stored open (the closing
/// vertex is not repeated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub label: ZoneLabel,
    pub ring: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMap {
    pub zones: Vec<Zone>,
    pub bbox: BoundingBox,
}

const EDGE_EPS: f64 = 1e-12;

impl ZoneMap {
    /// Parses and validates the JSON zone configuration.
    pub fn from_json(text: &str) -> Result<ZoneMap> {
        let raw: ZoneMap = serde_json::from_str(text)?;
        ZoneMap::new(raw.zones, raw.bbox)
    }

    pub fn new(zones: Vec<Zone>, bbox: BoundingBox) -> Result<ZoneMap> {
        let zones = zones
            .into_iter()
            .enumerate()
            .map(|(i, z)| {
                let ring = normalize_ring(z.ring).map_err(|e| match e {
                    Error::Schema(m) => Error::Schema(format!("zone {i} ({}): {m}", z.label)),
                    Error::Geometry(m) => Error::Geometry(format!("zone {i} ({}): {m}", z.label)),
                    other => other,
                })?;
                Ok(Zone { label: z.label, ring })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ZoneMap { zones, bbox })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("zone map serializes")
    }

    /// Stylized layout of a two-runway airport with a terminal apron and a
    /// cargo parking area, roughly at the position of LAX.
    pub fn default_layout() -> ZoneMap {
        ZoneMap::from_json(include_str!("../assets/zones_lax.json")).expect("bundled zone map is valid")
    }

    pub fn classify(&self, lat: f64, lon: f64) -> Option<ZoneLabel> {
        self.zones
            .iter()
            .find(|z| polygon_contains(&z.ring, lat, lon))
            .map(|z| z.label)
    }
}

fn normalize_ring(mut ring: Vec<[f64; 2]>) -> Result<Vec<[f64; 2]>> {
    if ring.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Schema("non-finite coordinate".into()));
    }
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring.dedup();
    if ring.len() < 3 {
        return Err(Error::Schema(format!("ring needs at least 3 distinct vertices, got {}", ring.len())));
    }
    if let Some((i, j)) = first_self_intersection(&ring) {
        return Err(Error::Geometry(format!("ring edges {i} and {j} intersect")));
    }
    Ok(ring)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn first_self_intersection(ring: &[[f64; 2]]) -> Option<(usize, usize)> {
    let n = ring.len();
    let edge = |i: usize| (ring[i], ring[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a1, a2) = edge(i);
            let (b1, b2) = edge(j);
            if adjacent {
                // Neighbours share one vertex; they only conflict if they fold
                // back over each other.
                let (shared, other_a, other_b) = if j == i + 1 { (a2, a1, b2) } else { (a1, a2, b1) };
                if orient(shared, other_a, other_b) == 0.0 {
                    let dot = (other_a[0] - shared[0]) * (other_b[0] - shared[0])
                        + (other_a[1] - shared[1]) * (other_b[1] - shared[1]);
                    if dot > 0.0 {
                        return Some((i, j));
                    }
                }
                continue;
            }
            if segments_intersect(a1, a2, b1, b2) {
                return Some((i, j));
            }
        }
    }
    None
}

fn on_edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    if orient(a, b, p).abs() > EDGE_EPS * len.max(1.0) {
        return false;
    }
    let lo0 = a[0].min(b[0]) - EDGE_EPS;
    let hi0 = a[0].max(b[0]) + EDGE_EPS;
    let lo1 = a[1].min(b[1]) - EDGE_EPS;
    let hi1 = a[1].max(b[1]) + EDGE_EPS;
    p[0] >= lo0 && p[0] <= hi0 && p[1] >= lo1 && p[1] <= hi1
}

/// Even-odd containment with boundary points counted as inside.
pub fn polygon_contains(ring: &[[f64; 2]], lat: f64, lon: f64) -> bool {
    let n = ring.len();
    let p = [lat, lon];
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if on_edge(a, b, p) {
            return true;
        }
        // ray towards +lon along constant lat
        if (a[0] > lat) != (b[0] > lat) {
            let cross_lon = (b[1] - a[1]) * (lat - a[0]) / (b[0] - a[0]) + a[1];
            if lon < cross_lon {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn classify_point(p: &GpsPoint, map: &ZoneMap) -> Option<ZoneLabel> {
    map.classify(p.latitude, p.longitude)
}

/// Fills `zone_labels` with the labels of every member point.
pub fn label_trajectory(mut t: Trajectory, map: &ZoneMap) -> Trajectory {
    t.zone_labels = t.points.iter().filter_map(|p| classify_point(p, map)).collect();
    t
}
