use chrono::NaiveDate;
use std::collections::{BTreeMap, BTreeSet};

use super::GpsPoint;
use crate::zones::ZoneLabel;

/// A continuous surface movement of one vehicle on one UTC date.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub vehicle_id: String,
    pub date: NaiveDate,
    /// Strictly increasing in time.
    pub points: Vec<GpsPoint>,
    /// Zones touched by any member point; empty until labeled.
    pub zone_labels: BTreeSet<ZoneLabel>,
}

/// Groups points by (vehicle, UTC date) and splits each group wherever two
/// consecutive fixes are more than `gap_threshold_s` seconds apart.
///
/// Output is ordered by vehicle, date, then time.
pub fn segment_trajectories(points: Vec<GpsPoint>, gap_threshold_s: i64) -> Vec<Trajectory> {
    let mut groups: BTreeMap<(String, NaiveDate), Vec<GpsPoint>> = BTreeMap::new();
    for p in points {
        groups
            .entry((p.vehicle_id.clone(), p.time.date_naive()))
            .or_default()
            .push(p);
    }
    let mut out = Vec::new();
    for ((vehicle_id, date), mut pts) in groups {
        pts.sort_by_key(|p| p.time);
        let mut current: Vec<GpsPoint> = Vec::new();
        for p in pts {
            if let Some(last) = current.last() {
                if (p.time - last.time).num_seconds() > gap_threshold_s {
                    out.push(Trajectory {
                        vehicle_id: vehicle_id.clone(),
                        date,
                        points: std::mem::take(&mut current),
                        zone_labels: BTreeSet::new(),
                    });
                }
            }
            current.push(p);
        }
        if !current.is_empty() {
            out.push(Trajectory {
                vehicle_id,
                date,
                points: current,
                zone_labels: BTreeSet::new(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn pt(id: &str, day: u32, secs: i64) -> GpsPoint {
        GpsPoint {
            vehicle_id: id.into(),
            time: Utc.with_ymd_and_hms(2016, 7, day, 6, 0, 0).unwrap() + Duration::seconds(secs),
            latitude: 33.94,
            longitude: -118.4,
            speed: Some(0.0),
            heading: Some(0.0),
        }
    }

    #[test]
    fn small_gaps_make_one_trajectory() {
        let pts: Vec<_> = (0..10).map(|i| pt("A", 1, i * 60)).collect();
        let t = segment_trajectories(pts, 1800);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].points.len(), 10);
    }

    #[test]
    fn hour_gap_splits() {
        let mut pts: Vec<_> = (0..5).map(|i| pt("A", 1, i * 60)).collect();
        pts.extend((0..5).map(|i| pt("A", 1, 240 + 3600 + i * 60)));
        let t = segment_trajectories(pts, 1800);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].points.len(), 5);
    }

    #[test]
    fn dates_never_merge() {
        let pts = vec![pt("A", 1, 0), pt("A", 1, 10), pt("A", 2, 0), pt("A", 2, 10)];
        let t = segment_trajectories(pts, 10_000_000);
        assert_eq!(t.len(), 2);
        assert_ne!(t[0].date, t[1].date);
    }

    #[test]
    fn empty_input() {
        assert!(segment_trajectories(Vec::new(), 1800).is_empty());
    }

    proptest! {
        #[test]
        fn segmentation_partitions_points(
            raw in prop::collection::vec((0usize..3, 1u32..4, 0i64..20_000), 0..80),
            threshold in 60i64..4000,
        ) {
            let ids = ["A", "B", "C"];
            let mut pts: Vec<_> = raw.iter().map(|&(v, d, s)| pt(ids[v], d, s)).collect();
            pts.sort_by_key(|p| (p.vehicle_id.clone(), p.time));
            pts.dedup_by(|a, b| a.vehicle_id == b.vehicle_id && a.time == b.time);
            let trajs = segment_trajectories(pts.clone(), threshold);
            let mut back: Vec<_> = trajs.iter().flat_map(|t| t.points.clone()).collect();
            back.sort_by_key(|p| (p.vehicle_id.clone(), p.time));
            prop_assert_eq!(back, pts);
            for t in &trajs {
                prop_assert!(t.points.iter().all(|p| p.vehicle_id == t.vehicle_id && p.time.date_naive() == t.date));
                prop_assert!(t.points.windows(2).all(|w| (w[1].time - w[0].time).num_seconds() <= threshold));
            }
        }
    }
}
