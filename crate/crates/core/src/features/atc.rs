//! Tarmac traffic counts over a flight's observation window and prediction gap.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::TimeWindow;
use crate::ingest::{FlightRecord, GpsPoint, Trajectory};
use crate::zones::{ZoneLabel, ZoneMap};

/// Ten traffic-complexity counts for one prediction window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtcFeatures {
    /// Departures scheduled to leave the gate during the gap.
    pub takeoff_plan: u32,
    /// Departures that took off during the observation window.
    pub takeoff_num: u32,
    /// Arrivals scheduled to reach the gate during the gap.
    pub landing_plan: u32,
    /// Arrivals whose wheels touched down during the observation window.
    pub landing_num: u32,
    pub apron_point: u32,
    pub runway_point: u32,
    pub parking_point: u32,
    pub apron_traj: u32,
    pub runway_traj: u32,
    pub parking_traj: u32,
}

impl AtcFeatures {
    pub const NAMES: [&'static str; 10] = [
        "takeoff_plan",
        "takeoff_num",
        "landing_plan",
        "landing_num",
        "apron_point",
        "runway_point",
        "parking_point",
        "apron_traj",
        "runway_traj",
        "parking_traj",
    ];

    pub fn as_array(&self) -> [f64; 10] {
        [
            self.takeoff_plan,
            self.takeoff_num,
            self.landing_plan,
            self.landing_num,
            self.apron_point,
            self.runway_point,
            self.parking_point,
            self.apron_traj,
            self.runway_traj,
            self.parking_traj,
        ]
        .map(f64::from)
    }

    fn points_mut(&mut self, z: ZoneLabel) -> &mut u32 {
        match z {
            ZoneLabel::Apron => &mut self.apron_point,
            ZoneLabel::Runway => &mut self.runway_point,
            ZoneLabel::Parking => &mut self.parking_point,
        }
    }

    fn trajs_mut(&mut self, z: ZoneLabel) -> &mut u32 {
        match z {
            ZoneLabel::Apron => &mut self.apron_traj,
            ZoneLabel::Runway => &mut self.runway_traj,
            ZoneLabel::Parking => &mut self.parking_traj,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtcConfig {
    /// Minimum ground speed (m/s) at the last runway fix for a trajectory to
    /// count as a takeoff.
    pub takeoff_speed_threshold: f64,
}

impl Default for AtcConfig {
    fn default() -> Self {
        AtcConfig {
            takeoff_speed_threshold: 60.0,
        }
    }
}

/// Time-ordered view of all surface traffic, built once and queried per
/// flight window.
#[derive(Debug, Clone)]
pub struct TrafficIndex {
    points: Vec<GpsPoint>,
    trajectory: Vec<u32>,
    zone: Vec<Option<ZoneLabel>>,
    takeoffs: Vec<DateTime<Utc>>,
    departures_sched: Vec<DateTime<Utc>>,
    arrivals_sched: Vec<DateTime<Utc>>,
    wheels_on: Vec<DateTime<Utc>>,
}

fn count_in(sorted: &[DateTime<Utc>], start: DateTime<Utc>, end: DateTime<Utc>) -> u32 {
    let lo = sorted.partition_point(|t| *t < start);
    let hi = sorted.partition_point(|t| *t < end);
    hi.saturating_sub(lo) as u32
}

/// Time of the trajectory's last runway fix when that fix is fast enough to
/// be a takeoff roll.
pub fn takeoff_time(t: &Trajectory, map: &ZoneMap, speed_threshold: f64) -> Option<DateTime<Utc>> {
    let last = t
        .points
        .iter()
        .rev()
        .find(|p| map.classify(p.latitude, p.longitude) == Some(ZoneLabel::Runway))?;
    (last.speed_or_zero() >= speed_threshold).then_some(last.time)
}

impl TrafficIndex {
    /// `schedule` may mix legs leaving and entering `airport`; legs touching
    /// neither end are ignored.
    pub fn new(
        trajectories: &[Trajectory],
        schedule: &[FlightRecord],
        airport: &str,
        map: &ZoneMap,
        config: &AtcConfig,
    ) -> TrafficIndex {
        let mut tagged: Vec<(GpsPoint, u32, Option<ZoneLabel>)> = Vec::new();
        let mut takeoffs = Vec::new();
        for (i, t) in trajectories.iter().enumerate() {
            for p in &t.points {
                tagged.push((p.clone(), i as u32, map.classify(p.latitude, p.longitude)));
            }
            if let Some(time) = takeoff_time(t, map, config.takeoff_speed_threshold) {
                takeoffs.push(time);
            }
        }
        tagged.sort_by(|a, b| a.0.time.cmp(&b.0.time).then(a.1.cmp(&b.1)));
        takeoffs.sort();

        let mut departures_sched: Vec<_> = schedule.iter().filter(|f| f.origin == airport).map(|f| f.sched_dep).collect();
        let mut arrivals_sched = Vec::new();
        let mut wheels_on = Vec::new();
        for f in schedule.iter().filter(|f| f.destination == airport) {
            arrivals_sched.push(f.sched_arr);
            wheels_on.push(f.wheels_on);
        }
        departures_sched.sort();
        arrivals_sched.sort();
        wheels_on.sort();

        let mut points = Vec::with_capacity(tagged.len());
        let mut trajectory = Vec::with_capacity(tagged.len());
        let mut zone = Vec::with_capacity(tagged.len());
        for (p, t, z) in tagged {
            points.push(p);
            trajectory.push(t);
            zone.push(z);
        }
        TrafficIndex {
            points,
            trajectory,
            zone,
            takeoffs,
            departures_sched,
            arrivals_sched,
            wheels_on,
        }
    }

    fn window_range(&self, w: &TimeWindow) -> std::ops::Range<usize> {
        let start = w.observation_start();
        let lo = self.points.partition_point(|p| p.time < start);
        let hi = self.points.partition_point(|p| p.time < w.prediction_time);
        lo..hi
    }

    /// GPS fixes inside the observation window, in time order.
    pub fn window_points(&self, w: &TimeWindow) -> &[GpsPoint] {
        &self.points[self.window_range(w)]
    }

    pub fn atc(&self, w: &TimeWindow) -> AtcFeatures {
        let mut f = AtcFeatures {
            takeoff_plan: count_in(&self.departures_sched, w.prediction_time, w.gap_end()),
            landing_plan: count_in(&self.arrivals_sched, w.prediction_time, w.gap_end()),
            takeoff_num: count_in(&self.takeoffs, w.observation_start(), w.prediction_time),
            landing_num: count_in(&self.wheels_on, w.observation_start(), w.prediction_time),
            ..Default::default()
        };
        let mut touched: [Vec<u32>; 3] = Default::default();
        for i in self.window_range(w) {
            if let Some(z) = self.zone[i] {
                *f.points_mut(z) += 1;
                touched[z.index()].push(self.trajectory[i]);
            }
        }
        for z in ZoneLabel::ALL {
            let ids = &mut touched[z.index()];
            ids.sort_unstable();
            ids.dedup();
            *f.trajs_mut(z) = ids.len() as u32;
        }
        f
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One-shot extraction for a single window. Build a [`TrafficIndex`] instead
/// when querying many windows over the same traffic.
pub fn extract_atc(
    window: &TimeWindow,
    trajectories: &[Trajectory],
    schedule: &[FlightRecord],
    airport: &str,
    map: &ZoneMap,
    config: &AtcConfig,
) -> AtcFeatures {
    TrafficIndex::new(trajectories, schedule, airport, map, config).atc(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::BoundingBox;
    use crate::zones::Zone;
    use chrono::{Duration, TimeZone};
    use std::collections::BTreeSet;

    // unit squares: apron [0,1]², runway [0,1]x[2,3], parking [0,1]x[4,5] in (lat, lon)
    fn toy_map() -> ZoneMap {
        let sq = |lon0: f64| vec![[0.0, lon0], [0.0, lon0 + 1.0], [1.0, lon0 + 1.0], [1.0, lon0]];
        ZoneMap::new(
            vec![
                Zone {
                    label: ZoneLabel::Apron,
                    ring: sq(0.0),
                },
                Zone {
                    label: ZoneLabel::Runway,
                    ring: sq(2.0),
                },
                Zone {
                    label: ZoneLabel::Parking,
                    ring: sq(4.0),
                },
            ],
            BoundingBox::new(-1.0, -1.0, 2.0, 6.0).unwrap(),
        )
        .unwrap()
    }

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2016, 7, 1, 7, 0, 0).unwrap()
    }

    fn traj(id: &str, fixes: &[(i64, f64, f64)]) -> Trajectory {
        Trajectory {
            vehicle_id: id.into(),
            date: t0().date_naive(),
            points: fixes
                .iter()
                .map(|&(m, lon, speed)| GpsPoint {
                    vehicle_id: id.into(),
                    time: t0() + Duration::minutes(m),
                    latitude: 0.5,
                    longitude: lon,
                    speed: Some(speed),
                    heading: Some(0.0),
                })
                .collect(),
            zone_labels: BTreeSet::new(),
        }
    }

    fn window() -> TimeWindow {
        // observation [07:00, 08:00), gap [08:00, 12:00)
        TimeWindow::new(t0() + Duration::minutes(60), 60, 240).unwrap()
    }

    #[test]
    fn empty_inputs_give_zeros() {
        let f = extract_atc(&window(), &[], &[], "LAX", &toy_map(), &AtcConfig::default());
        assert_eq!(f, AtcFeatures::default());
    }

    #[test]
    fn five_apron_points_one_trajectory() {
        let t = traj("A", &[(1, 0.5, 3.0), (2, 0.5, 3.0), (3, 0.5, 3.0), (4, 0.5, 3.0), (5, 0.5, 3.0)]);
        let f = extract_atc(&window(), &[t], &[], "LAX", &toy_map(), &AtcConfig::default());
        assert_eq!(
            f,
            AtcFeatures {
                apron_point: 5,
                apron_traj: 1,
                ..Default::default()
            }
        );
    }

    #[test]
    fn points_outside_window_or_zones_are_ignored() {
        let t = traj("A", &[(-1, 0.5, 0.0), (10, 1.5, 0.0), (60, 0.5, 0.0), (30, 4.5, 1.0)]);
        let f = extract_atc(&window(), &[t], &[], "LAX", &toy_map(), &AtcConfig::default());
        assert_eq!(f.apron_point, 0);
        assert_eq!(f.parking_point, 1);
        assert_eq!(f.parking_traj, 1);
    }

    #[test]
    fn takeoff_needs_fast_last_runway_fix_inside_window() {
        let fast = traj("A", &[(10, 0.5, 5.0), (20, 2.5, 20.0), (21, 2.5, 75.0), (22, 3.5, 80.0)]);
        let slow = traj("B", &[(10, 2.5, 70.0), (12, 2.5, 15.0), (14, 0.5, 5.0)]);
        let late = traj("C", &[(59, 2.5, 40.0), (61, 2.5, 70.0)]);
        let f = extract_atc(&window(), &[fast, slow, late], &[], "LAX", &toy_map(), &AtcConfig::default());
        assert_eq!(f.takeoff_num, 1);
        assert_eq!(f.runway_point, 5);
        assert_eq!(f.runway_traj, 3);
    }

    #[test]
    fn schedule_counts_respect_interval_ends() {
        let at = |m: i64| t0() + Duration::minutes(m);
        let mut legs = Vec::new();
        // departures at gap start (counted), inside, at gap end (excluded)
        for (i, m) in [60, 200, 300].into_iter().enumerate() {
            legs.push(crate::ingest::test_record(&format!("D{i}"), "N", "LAX", "SFO", at(m)));
        }
        // arrivals with wheels-on at 07:00 (counted), 07:59 (counted), 08:00 (excluded)
        for (i, m) in [0, 59, 60].into_iter().enumerate() {
            let mut r = crate::ingest::test_record(&format!("A{i}"), "M", "SFO", "LAX", at(m - 90));
            r.wheels_on = at(m);
            r.sched_arr = at(m + 100);
            legs.push(r);
        }
        let f = extract_atc(&window(), &[], &legs, "LAX", &toy_map(), &AtcConfig::default());
        assert_eq!(f.takeoff_plan, 2);
        assert_eq!(f.landing_num, 2);
        assert_eq!(f.landing_plan, 3);
    }
}
