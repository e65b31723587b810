//! Spherical-earth helpers used at airport scale.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance in meters between two lat/lon positions (degrees).
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing from the first to the second position, in
/// radians in `[0, 2π)`, 0 = North, clockwise.
pub fn initial_bearing(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dlambda = (lon2 - lon1).to_radians();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    normalize_bearing(y.atan2(x))
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_bearing(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Axis-aligned lat/lon rectangle. Serialized as `[lat_min, lon_min, lat_max, lon_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lon_min: f64,
    pub lat_max: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn new(lat_min: f64, lon_min: f64, lat_max: f64, lon_max: f64) -> Result<Self> {
        let b = BoundingBox { lat_min, lon_min, lat_max, lon_max };
        b.validate()?;
        Ok(b)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let finite = [self.lat_min, self.lon_min, self.lat_max, self.lon_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.lat_max <= self.lat_min || self.lon_max <= self.lon_min {
            return Err(Error::Geometry(format!(
                "degenerate bounding box [{}, {}, {}, {}]",
                self.lat_min, self.lon_min, self.lat_max, self.lon_max
            )));
        }
        Ok(())
    }

    /// Inclusive containment test.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min && lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.lat_min + self.lat_max) / 2.0,
            (self.lon_min + self.lon_max) / 2.0,
        )
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.lat_min, b.lon_min, b.lat_max, b.lon_max]
    }
}

/// Position reached by travelling `distance_m` from a start along `bearing`
/// (radians). Uses the local flat-earth approximation, which is accurate to
/// well under a meter over a few kilometers.
pub fn offset_position(lat: f64, lon: f64, bearing: f64, distance_m: f64) -> (f64, f64) {
    let dnorth = distance_m * bearing.cos();
    let deast = distance_m * bearing.sin();
    let dlat = (dnorth / EARTH_RADIUS_M).to_degrees();
    let dlon = (deast / (EARTH_RADIUS_M * lat.to_radians().cos())).to_degrees();
    (lat + dlat, lon + dlon)
}
