//! Surface paths over the zone layout and their sampling into GPS fixes.
//!
//! Runways are taken as east–west rectangles used from their west end.
//! Aircraft move between the gate areas and the runways along a taxi line
//! midway between the apron and each runway.

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use std::f64::consts::FRAC_PI_2;

use crate::geo::{haversine_m, initial_bearing, offset_position, BoundingBox};
use crate::ingest::GpsPoint;
use crate::zones::{ZoneLabel, ZoneMap};
use crate::{Error, Result};

const TAKEOFF_ACCEL: f64 = 1.8;
pub const LIFTOFF_SPEED: f64 = 78.0;
pub const TOUCHDOWN_SPEED: f64 = 70.0;
const LANDING_DECEL: f64 = 2.2;
const RUNWAY_EXIT_SPEED: f64 = 15.0;
/// Distance from a runway's west edge to its hold line and line-up point.
const HOLD_INSET_M: f64 = 140.0;
const TOUCHDOWN_INSET_M: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Rect {
    fn of_ring(ring: &[[f64; 2]]) -> Rect {
        let mut r = Rect {
            lat_min: f64::INFINITY,
            lat_max: f64::NEG_INFINITY,
            lon_min: f64::INFINITY,
            lon_max: f64::NEG_INFINITY,
        };
        for v in ring {
            r.lat_min = r.lat_min.min(v[0]);
            r.lat_max = r.lat_max.max(v[0]);
            r.lon_min = r.lon_min.min(v[1]);
            r.lon_max = r.lon_max.max(v[1]);
        }
        r
    }

    pub fn center_lat(&self) -> f64 {
        0.5 * (self.lat_min + self.lat_max)
    }

    fn union(&self, o: &Rect) -> Rect {
        Rect {
            lat_min: self.lat_min.min(o.lat_min),
            lat_max: self.lat_max.max(o.lat_max),
            lon_min: self.lon_min.min(o.lon_min),
            lon_max: self.lon_max.max(o.lon_max),
        }
    }
}

/// Geometry the generator routes aircraft over.
#[derive(Debug, Clone)]
pub struct Layout {
    pub map: ZoneMap,
    pub runways: Vec<Rect>,
    apron: Rect,
    parking: Rect,
    /// Gate area spanned by apron and parking together.
    gates: Rect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Leg {
    /// Straight move with speed changing linearly in time from `v0` to `v1`.
    Move {
        from: (f64, f64),
        to: (f64, f64),
        v0: f64,
        v1: f64,
    },
    Hold { at: (f64, f64), seconds: f64 },
}

impl Leg {
    pub fn seconds(&self) -> f64 {
        match *self {
            Leg::Move { from, to, v0, v1 } => {
                let d = haversine_m(from.0, from.1, to.0, to.1);
                if d == 0.0 || v0 + v1 <= 0.0 {
                    0.0
                } else {
                    2.0 * d / (v0 + v1)
                }
            }
            Leg::Hold { seconds, .. } => seconds,
        }
    }

    fn end(&self) -> (f64, f64) {
        match *self {
            Leg::Move { to, .. } => to,
            Leg::Hold { at, .. } => at,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Path {
    pub legs: Vec<Leg>,
}

impl Path {
    pub fn seconds(&self) -> f64 {
        self.legs.iter().map(Leg::seconds).sum()
    }

    /// Whole-second duration used for timestamps.
    pub fn whole_seconds(&self) -> i64 {
        self.seconds().round().max(1.0) as i64
    }

    /// Position, speed and heading `tau` seconds after the start.
    pub fn state(&self, tau: f64) -> ((f64, f64), f64, f64) {
        let mut heading = 0.0;
        let mut t = tau;
        for (i, leg) in self.legs.iter().enumerate() {
            let dur = leg.seconds();
            let last = i + 1 == self.legs.len();
            match *leg {
                Leg::Move { from, to, v0, v1 } => {
                    if from != to {
                        heading = initial_bearing(from.0, from.1, to.0, to.1);
                    }
                    if t <= dur || last {
                        let t = t.min(dur);
                        if dur == 0.0 {
                            return (to, v1, heading);
                        }
                        let a = (v1 - v0) / dur;
                        let s = v0 * t + 0.5 * a * t * t;
                        let d = haversine_m(from.0, from.1, to.0, to.1);
                        let f = (s / d).clamp(0.0, 1.0);
                        let pos = (from.0 + f * (to.0 - from.0), from.1 + f * (to.1 - from.1));
                        return (pos, v0 + a * t, heading);
                    }
                }
                Leg::Hold { at, .. } => {
                    if t <= dur || last {
                        return (at, 0.0, heading);
                    }
                }
            }
            t -= dur;
        }
        ((0.0, 0.0), 0.0, heading)
    }

    /// Fixes every `interval_s` seconds from `start`, plus one at the end.
    pub fn sample(&self, vehicle: &str, start: DateTime<Utc>, interval_s: i64) -> Vec<GpsPoint> {
        let total = self.whole_seconds();
        let scale = self.seconds() / total as f64;
        let mut ticks: Vec<i64> = (0..).map(|k| k * interval_s).take_while(|&s| s < total).collect();
        ticks.push(total);
        ticks
            .into_iter()
            .map(|s| {
                let ((lat, lon), speed, heading) = self.state(s as f64 * scale);
                GpsPoint {
                    vehicle_id: vehicle.to_string(),
                    time: start + Duration::seconds(s),
                    latitude: lat,
                    longitude: lon,
                    speed: Some(speed.max(0.0)),
                    heading: Some(heading),
                }
            })
            .collect()
    }
}

/// Surface speeds and hold times at congestion load `load`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pace {
    pub ramp: f64,
    pub parking: f64,
    pub taxi: f64,
    pub ramp_wait: f64,
    pub queue: f64,
    pub line_up: f64,
}

impl Pace {
    pub fn at_load<R: Rng>(rng: &mut R, load: f64) -> Pace {
        let busy = load * load;
        let mut jit = || rng.random_range(0.8..1.2);
        Pace {
            ramp: 5.0 / load,
            parking: 3.0 / load,
            taxi: 9.0 / load,
            ramp_wait: 120.0 * busy * jit(),
            queue: 240.0 * busy * jit(),
            line_up: 5.0 + 30.0 * busy * jit(),
        }
    }
}

impl Layout {
    /// Needs at least one zone of each label.
    pub fn from_map(map: &ZoneMap) -> Result<Layout> {
        let rect = |label: ZoneLabel| -> Vec<Rect> {
            map.zones
                .iter()
                .filter(|z| z.label == label)
                .map(|z| Rect::of_ring(&z.ring))
                .collect()
        };
        let runways = rect(ZoneLabel::Runway);
        let apron = rect(ZoneLabel::Apron);
        let parking = rect(ZoneLabel::Parking);
        if runways.is_empty() || apron.is_empty() || parking.is_empty() {
            return Err(Error::Config("zone map needs runway, apron and parking zones".into()));
        }
        let (apron, parking) = (apron[0], parking[0]);
        Ok(Layout {
            map: map.clone(),
            runways,
            apron,
            parking,
            gates: apron.union(&parking),
        })
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.map.bbox
    }

    /// Random position classified as `label` inside its first zone.
    pub fn sample_gate<R: Rng>(&self, rng: &mut R, parking: bool) -> (f64, f64) {
        let (r, label) = if parking {
            (self.parking, ZoneLabel::Parking)
        } else {
            (self.apron, ZoneLabel::Apron)
        };
        // keep gates off the zone edges so fix noise does not relabel them
        let (mlat, mlon) = (0.1 * (r.lat_max - r.lat_min), 0.05 * (r.lon_max - r.lon_min));
        loop {
            let lat = rng.random_range(r.lat_min + mlat..r.lat_max - mlat);
            let lon = rng.random_range(r.lon_min + mlon..r.lon_max - mlon);
            if self.map.classify(lat, lon) == Some(label) {
                return (lat, lon);
            }
        }
    }

    /// Latitude of the taxi line serving runway `r`.
    pub fn taxi_lat(&self, r: usize) -> f64 {
        let rw = &self.runways[r];
        if rw.center_lat() > self.gates.center_lat() {
            0.5 * (self.gates.lat_max + rw.lat_min)
        } else {
            0.5 * (rw.lat_max + self.gates.lat_min)
        }
    }

    fn along_runway(&self, r: usize, inset_m: f64) -> (f64, f64) {
        let rw = &self.runways[r];
        offset_position(rw.center_lat(), rw.lon_min, FRAC_PI_2, inset_m)
    }

    /// Gate → taxi line → hold → line-up → takeoff roll to liftoff.
    pub fn departure_path(&self, gate: (f64, f64), parking: bool, r: usize, pace: &Pace) -> Path {
        let taxi_lat = self.taxi_lat(r);
        let north = taxi_lat > gate.0;
        let push = offset_position(gate.0, gate.1, if north { 0.0 } else { std::f64::consts::PI }, 40.0);
        let ramp = if parking { pace.parking } else { pace.ramp };
        let lineup = self.along_runway(r, HOLD_INSET_M);
        let hold = (taxi_lat, lineup.1);
        let roll = LIFTOFF_SPEED * LIFTOFF_SPEED / (2.0 * TAKEOFF_ACCEL);
        let liftoff = offset_position(lineup.0, lineup.1, FRAC_PI_2, roll);
        let mv = |from, to, v| Leg::Move { from, to, v0: v, v1: v };
        Path {
            legs: vec![
                mv(gate, push, 1.5),
                Leg::Hold {
                    at: push,
                    seconds: pace.ramp_wait,
                },
                mv(push, (taxi_lat, push.1), ramp),
                mv((taxi_lat, push.1), hold, pace.taxi),
                Leg::Hold {
                    at: hold,
                    seconds: pace.queue,
                },
                mv(hold, lineup, 4.0),
                Leg::Hold {
                    at: lineup,
                    seconds: pace.line_up,
                },
                Leg::Move {
                    from: lineup,
                    to: liftoff,
                    v0: 0.0,
                    v1: LIFTOFF_SPEED,
                },
            ],
        }
    }

    /// Touchdown → rollout → exit → taxi line → gate.
    pub fn arrival_path(&self, gate: (f64, f64), parking: bool, r: usize, pace: &Pace) -> Path {
        let taxi_lat = self.taxi_lat(r);
        let touchdown = self.along_runway(r, TOUCHDOWN_INSET_M);
        let rollout = (TOUCHDOWN_SPEED.powi(2) - RUNWAY_EXIT_SPEED.powi(2)) / (2.0 * LANDING_DECEL);
        let exit = offset_position(touchdown.0, touchdown.1, FRAC_PI_2, rollout);
        let ramp = if parking { pace.parking } else { pace.ramp };
        let mv = |from, to, v| Leg::Move { from, to, v0: v, v1: v };
        Path {
            legs: vec![
                Leg::Move {
                    from: touchdown,
                    to: exit,
                    v0: TOUCHDOWN_SPEED,
                    v1: RUNWAY_EXIT_SPEED,
                },
                mv(exit, (taxi_lat, exit.1), 10.0),
                mv((taxi_lat, exit.1), (taxi_lat, gate.1), pace.taxi),
                mv((taxi_lat, gate.1), gate, ramp),
            ],
        }
    }
}

impl Path {
    pub fn end(&self) -> Option<(f64, f64)> {
        self.legs.last().map(Leg::end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(points: Vec<GpsPoint>, map: &ZoneMap) -> Vec<ZoneLabel> {
        let mut v: Vec<ZoneLabel> = points.iter().filter_map(|p| map.classify(p.latitude, p.longitude)).collect();
        v.dedup();
        v
    }

    #[test]
    fn departures_end_with_a_fast_runway_fix() {
        let map = ZoneMap::default_layout();
        let layout = Layout::from_map(&map).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t0 = Utc.with_ymd_and_hms(2016, 7, 4, 12, 0, 0).unwrap();
        for i in 0..40 {
            let parking = i % 3 == 0;
            let gate = layout.sample_gate(&mut rng, parking);
            let pace = Pace::at_load(&mut rng, 0.5 + i as f64 / 20.0);
            let path = layout.departure_path(gate, parking, i % 2, &pace);
            let pts = path.sample("D", t0, 15);
            let last = pts.last().unwrap();
            assert_eq!(map.classify(last.latitude, last.longitude), Some(ZoneLabel::Runway));
            assert!((last.speed.unwrap() - LIFTOFF_SPEED).abs() < 1e-6);
            assert!(pts.iter().all(|p| map.bbox.contains(p.latitude, p.longitude)));
            let first = if parking { ZoneLabel::Parking } else { ZoneLabel::Apron };
            assert_eq!(labels(pts, &map), vec![first, ZoneLabel::Runway]);
        }
    }

    #[test]
    fn arrivals_leave_the_runway_slowly() {
        let map = ZoneMap::default_layout();
        let layout = Layout::from_map(&map).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t0 = Utc.with_ymd_and_hms(2016, 7, 4, 12, 0, 0).unwrap();
        for i in 0..40 {
            let gate = layout.sample_gate(&mut rng, false);
            let pace = Pace::at_load(&mut rng, 1.0);
            let pts = layout.arrival_path(gate, false, i % 2, &pace).sample("A", t0, 15);
            let last_runway = pts
                .iter()
                .rev()
                .find(|p| map.classify(p.latitude, p.longitude) == Some(ZoneLabel::Runway))
                .unwrap();
            assert!(last_runway.speed.unwrap() < 60.0);
            assert_eq!(labels(pts, &map), vec![ZoneLabel::Runway, ZoneLabel::Apron]);
        }
    }

    #[test]
    fn sampling_is_continuous_in_time() {
        let leg = Leg::Move {
            from: (33.94, -118.42),
            to: (33.94, -118.41),
            v0: 0.0,
            v1: 20.0,
        };
        let path = Path { legs: vec![leg] };
        let d = haversine_m(33.94, -118.42, 33.94, -118.41);
        assert!((path.seconds() - d / 10.0).abs() < 1e-9);
        let (_, v, h) = path.state(path.seconds() / 2.0);
        assert!((v - 10.0).abs() < 1e-9);
        assert!((h - FRAC_PI_2).abs() < 1e-3);
    }
}
