//! Schedule records (one row per flight leg) and inbound-leg matching.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{Read, Write};

use super::gps::Parsed;
use crate::Result;

/// The five delay cause categories, in minutes (signed).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub carrier: f64,
    pub weather: f64,
    pub national_aviation_system: f64,
    pub security: f64,
    pub late_aircraft: f64,
}

impl DelayBreakdown {
    pub fn total(&self) -> f64 {
        self.carrier + self.weather + self.national_aviation_system + self.security + self.late_aircraft
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.carrier,
            self.weather,
            self.national_aviation_system,
            self.security,
            self.late_aircraft,
        ]
    }
}

/// Prediction targets of a departing flight: five delay components followed
/// by the total departure delay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub components: DelayBreakdown,
    pub departure_delay: f64,
}

impl LabelVector {
    pub const NAMES: [&'static str; 6] = [
        "dep_delay_carrier",
        "dep_delay_weather",
        "dep_delay_nas",
        "dep_delay_security",
        "dep_delay_late_aircraft",
        "dep_delay",
    ];
    /// Index of the departure delay inside [`LabelVector::as_array`].
    pub const TOTAL: usize = 5;

    pub fn as_array(&self) -> [f64; 6] {
        let c = self.components.as_array();
        [c[0], c[1], c[2], c[3], c[4], self.departure_delay]
    }

    pub fn is_consistent(&self) -> bool {
        (self.components.total() - self.departure_delay).abs() < 1e-9
    }
}

/// One flight leg from the schedule table. Times are UTC; elapsed times and
/// delays are whole minutes.
///
/// The same record type describes flights leaving and entering the airport
/// of interest; which role a record plays follows from `origin`/`destination`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightRecord {
    pub flight_id: String,
    pub airline: String,
    pub tail_number: String,
    pub origin: String,
    pub destination: String,
    /// Scheduled gate-out at the origin.
    pub sched_dep: DateTime<Utc>,
    /// Actual gate-out at the origin.
    pub actual_dep: DateTime<Utc>,
    pub sched_elapsed_min: i64,
    pub actual_elapsed_min: i64,
    /// Scheduled gate-in at the destination.
    pub sched_arr: DateTime<Utc>,
    /// Actual gate-in at the destination.
    pub actual_arr: DateTime<Utc>,
    /// Touchdown at the destination.
    pub wheels_on: DateTime<Utc>,
    pub arr_delay_carrier: i64,
    pub arr_delay_weather: i64,
    pub arr_delay_nas: i64,
    pub arr_delay_security: i64,
    pub arr_delay_late_aircraft: i64,
    pub arr_delay: i64,
    pub dep_delay_carrier: i64,
    pub dep_delay_weather: i64,
    pub dep_delay_nas: i64,
    pub dep_delay_security: i64,
    pub dep_delay_late_aircraft: i64,
    pub dep_delay: i64,
}

impl FlightRecord {
    pub fn departure_label(&self) -> LabelVector {
        LabelVector {
            components: DelayBreakdown {
                carrier: self.dep_delay_carrier as f64,
                weather: self.dep_delay_weather as f64,
                national_aviation_system: self.dep_delay_nas as f64,
                security: self.dep_delay_security as f64,
                late_aircraft: self.dep_delay_late_aircraft as f64,
            },
            departure_delay: self.dep_delay as f64,
        }
    }

    pub fn arrival_breakdown(&self) -> DelayBreakdown {
        DelayBreakdown {
            carrier: self.arr_delay_carrier as f64,
            weather: self.arr_delay_weather as f64,
            national_aviation_system: self.arr_delay_nas as f64,
            security: self.arr_delay_security as f64,
            late_aircraft: self.arr_delay_late_aircraft as f64,
        }
    }

    /// Checks the record-level invariants. Delay identities are checked to
    /// within a minute since on-disk delays are whole minutes.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.sched_arr <= self.sched_dep {
            return Err(format!("{}: scheduled arrival not after scheduled departure", self.flight_id));
        }
        let arr_secs = (self.actual_arr - self.sched_arr).num_seconds();
        if (arr_secs - 60 * self.arr_delay).abs() >= 60 {
            return Err(format!("{}: arrival delay does not match gate-in times", self.flight_id));
        }
        let dep_secs = (self.actual_dep - self.sched_dep).num_seconds();
        if (dep_secs - 60 * self.dep_delay).abs() >= 60 {
            return Err(format!("{}: departure delay does not match gate-out times", self.flight_id));
        }
        let dep_sum = self.dep_delay_carrier
            + self.dep_delay_weather
            + self.dep_delay_nas
            + self.dep_delay_security
            + self.dep_delay_late_aircraft;
        if dep_sum != self.dep_delay {
            return Err(format!("{}: departure delay components do not sum to total", self.flight_id));
        }
        Ok(())
    }
}

/// Parses the schedule CSV. Rows that fail to deserialize or violate the
/// record invariants are skipped and counted.
pub fn parse_schedule<R: Read>(reader: R) -> Result<Parsed<FlightRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    super::require_columns(&mut rdr, SCHEDULE_COLUMNS)?;
    let mut out = Parsed::default();
    for row in rdr.deserialize::<FlightRecord>() {
        match row {
            Ok(r) => match r.validate() {
                Ok(()) => out.records.push(r),
                Err(msg) => {
                    tracing::warn!("{msg}");
                    out.skipped += 1;
                }
            },
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => out.skipped += 1,
        }
    }
    Ok(out)
}

pub const SCHEDULE_COLUMNS: &[&str] = &[
    "flight_id",
    "airline",
    "tail_number",
    "origin",
    "destination",
    "sched_dep",
    "actual_dep",
    "sched_elapsed_min",
    "actual_elapsed_min",
    "sched_arr",
    "actual_arr",
    "wheels_on",
    "arr_delay_carrier",
    "arr_delay_weather",
    "arr_delay_nas",
    "arr_delay_security",
    "arr_delay_late_aircraft",
    "arr_delay",
    "dep_delay_carrier",
    "dep_delay_weather",
    "dep_delay_nas",
    "dep_delay_security",
    "dep_delay_late_aircraft",
    "dep_delay",
];

pub fn write_schedule<W: Write>(writer: W, records: &[FlightRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(SCHEDULE_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

/// For each departure, the index of the latest arrival of the same tail
/// whose actual gate-in precedes the departure's scheduled gate-out.
pub fn match_arrival_leg(departures: &[FlightRecord], arrivals: &[FlightRecord]) -> Vec<Option<usize>> {
    let mut by_tail: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, a) in arrivals.iter().enumerate() {
        by_tail.entry(a.tail_number.as_str()).or_default().push(i);
    }
    for idx in by_tail.values_mut() {
        idx.sort_by_key(|&i| (arrivals[i].actual_arr, i));
    }
    departures
        .iter()
        .map(|d| {
            let candidates = by_tail.get(d.tail_number.as_str())?;
            let n = candidates.partition_point(|&i| arrivals[i].actual_arr < d.sched_dep);
            (n > 0).then(|| candidates[n - 1])
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    pub(crate) fn record(id: &str, tail: &str, origin: &str, dest: &str, sched_dep: DateTime<Utc>) -> FlightRecord {
        let sched_arr = sched_dep + Duration::minutes(90);
        FlightRecord {
            flight_id: id.into(),
            airline: "AA".into(),
            tail_number: tail.into(),
            origin: origin.into(),
            destination: dest.into(),
            sched_dep,
            actual_dep: sched_dep,
            sched_elapsed_min: 90,
            actual_elapsed_min: 90,
            sched_arr,
            actual_arr: sched_arr,
            wheels_on: sched_arr - Duration::minutes(8),
            arr_delay_carrier: 0,
            arr_delay_weather: 0,
            arr_delay_nas: 0,
            arr_delay_security: 0,
            arr_delay_late_aircraft: 0,
            arr_delay: 0,
            dep_delay_carrier: 0,
            dep_delay_weather: 0,
            dep_delay_nas: 0,
            dep_delay_security: 0,
            dep_delay_late_aircraft: 0,
            dep_delay: 0,
        }
    }

    fn at(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2016, 7, 1, h, 0, 0).unwrap()
    }

    /// An arrival into LAX whose gate-in is at hour `h`.
    fn arriving(id: &str, tail: &str, h: u32) -> FlightRecord {
        record(id, tail, "SFO", "LAX", at(h) - Duration::minutes(90))
    }

    #[test]
    fn matches_prior_arrival() {
        let deps = vec![record("D1", "N123", "LAX", "JFK", at(11))];
        let arrs = vec![arriving("A1", "N123", 9)];
        assert_eq!(match_arrival_leg(&deps, &arrs), vec![Some(0)]);
    }

    #[test]
    fn no_prior_arrival_is_absent() {
        let deps = vec![record("D1", "N123", "LAX", "JFK", at(11))];
        let arrs = vec![arriving("A1", "N999", 9), arriving("A2", "N123", 12)];
        assert_eq!(match_arrival_leg(&deps, &arrs), vec![None]);
    }

    #[test]
    fn latest_preceding_arrival_wins() {
        let deps = vec![record("D1", "N123", "LAX", "JFK", at(11))];
        let arrs = vec![arriving("A1", "N123", 9), arriving("A0", "N123", 6)];
        assert_eq!(match_arrival_leg(&deps, &arrs), vec![Some(0)]);
    }

    #[test]
    fn schedule_round_trip() {
        let recs = vec![record("D1", "N1", "LAX", "JFK", at(11)), arriving("A1", "N1", 9)];
        let mut buf = Vec::new();
        write_schedule(&mut buf, &recs).unwrap();
        let parsed = parse_schedule(buf.as_slice()).unwrap();
        assert_eq!(parsed.skipped, 0);
        assert_eq!(parsed.records, recs);
    }

    #[test]
    fn inconsistent_components_are_skipped() {
        let mut r = record("D1", "N1", "LAX", "JFK", at(11));
        r.dep_delay_carrier = 5;
        let mut buf = Vec::new();
        write_schedule(&mut buf, &[r]).unwrap();
        let parsed = parse_schedule(buf.as_slice()).unwrap();
        assert_eq!(parsed.skipped, 1);
    }

    #[test]
    fn label_sum_identity() {
        let mut r = record("D1", "N1", "LAX", "JFK", at(11));
        r.dep_delay_carrier = 3;
        r.dep_delay_late_aircraft = 7;
        r.dep_delay = 10;
        assert!(r.departure_label().is_consistent());
        assert_eq!(r.departure_label().as_array()[LabelVector::TOTAL], 10.0);
    }
}
