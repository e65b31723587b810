use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::AtcFeatures;
use crate::ingest::FlightRecord;

/// Flight's own schedule attributes followed by its inbound leg's times and
/// delays.
pub const REFERENCE_NAMES: [&str; 14] = [
    "sched_dep_minute",
    "sched_dep_weekday",
    "sched_elapsed_min",
    "inbound_sched_arr_minute",
    "inbound_actual_arr_minute",
    "inbound_sched_elapsed_min",
    "inbound_actual_elapsed_min",
    "inbound_wheels_on_minute",
    "inbound_arr_delay_carrier",
    "inbound_arr_delay_weather",
    "inbound_arr_delay_nas",
    "inbound_arr_delay_security",
    "inbound_arr_delay_late_aircraft",
    "inbound_arr_delay",
];

pub const MISSING_INBOUND: &str = "missing_inbound";

pub fn minute_of_day(t: DateTime<Utc>) -> f64 {
    f64::from(t.hour() * 60 + t.minute())
}

/// Monday = 0.
pub fn weekday_index(t: DateTime<Utc>) -> f64 {
    f64::from(t.weekday().num_days_from_monday())
}

/// Reference features and the missing-inbound flag. Inbound fields are zero
/// when no inbound leg was matched.
pub fn reference_features(flight: &FlightRecord, inbound: Option<&FlightRecord>) -> ([f64; 14], bool) {
    let mut v = [0.0; 14];
    v[0] = minute_of_day(flight.sched_dep);
    v[1] = weekday_index(flight.sched_dep);
    v[2] = flight.sched_elapsed_min as f64;
    if let Some(a) = inbound {
        v[3] = minute_of_day(a.sched_arr);
        v[4] = minute_of_day(a.actual_arr);
        v[5] = a.sched_elapsed_min as f64;
        v[6] = a.actual_elapsed_min as f64;
        v[7] = minute_of_day(a.wheels_on);
        v[8..13].copy_from_slice(&a.arrival_breakdown().as_array());
        v[13] = a.arr_delay as f64;
    }
    (v, inbound.is_none())
}

/// Weather at the prediction moment in both representations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeatherFeatures {
    /// Numeric fields, wind bearing and one-hot condition.
    pub raw: Vec<f64>,
    /// Principal component scores of `raw`.
    pub pca: Vec<f64>,
}

/// One flight's model input, before column selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub reference: [f64; 14],
    pub missing_inbound: bool,
    pub atc: AtcFeatures,
    pub weather: Vec<f64>,
}

impl FeatureVector {
    /// Reference, missing flag, ATC, weather.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.reference);
        v.push(if self.missing_inbound { 1.0 } else { 0.0 });
        v.extend_from_slice(&self.atc.as_array());
        v.extend_from_slice(&self.weather);
        v
    }

    pub fn len(&self) -> usize {
        REFERENCE_NAMES.len() + 1 + AtcFeatures::NAMES.len() + self.weather.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Assembles the vector with either raw (`use_pca = false`) or projected
/// weather.
pub fn build_feature_vector(
    flight: &FlightRecord,
    inbound: Option<&FlightRecord>,
    atc: AtcFeatures,
    weather: &WeatherFeatures,
    use_pca: bool,
) -> FeatureVector {
    let (reference, missing_inbound) = reference_features(flight, inbound);
    FeatureVector {
        reference,
        missing_inbound,
        atc,
        weather: if use_pca { weather.pca.clone() } else { weather.raw.clone() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn departure() -> FlightRecord {
        // 2016-07-01 is a Friday
        crate::ingest::test_record("D1", "N1", "LAX", "JFK", Utc.with_ymd_and_hms(2016, 7, 1, 13, 25, 0).unwrap())
    }

    fn weather() -> WeatherFeatures {
        WeatherFeatures {
            raw: vec![1.0, 2.0, 3.0],
            pca: vec![0.5],
        }
    }

    #[test]
    fn with_inbound() {
        let mut inbound = crate::ingest::test_record(
            "A1",
            "N1",
            "SFO",
            "LAX",
            Utc.with_ymd_and_hms(2016, 7, 1, 9, 0, 0).unwrap(),
        );
        inbound.actual_arr += Duration::minutes(17);
        inbound.arr_delay = 17;
        inbound.arr_delay_late_aircraft = 17;
        let v = build_feature_vector(&departure(), Some(&inbound), AtcFeatures::default(), &weather(), true);
        assert!(!v.missing_inbound);
        assert_eq!(v.reference[0], 13.0 * 60.0 + 25.0);
        assert_eq!(v.reference[1], 4.0);
        assert_eq!(v.reference[4], 10.0 * 60.0 + 47.0);
        assert_eq!(v.reference[12], 17.0);
        assert_eq!(v.reference[13], 17.0);
        assert_eq!(v.to_vec().len(), 14 + 1 + 10 + 1);
    }

    #[test]
    fn without_inbound() {
        let v = build_feature_vector(&departure(), None, AtcFeatures::default(), &weather(), false);
        assert!(v.missing_inbound);
        assert!(v.reference[3..].iter().all(|&x| x == 0.0));
        let flat = v.to_vec();
        assert_eq!(flat.len(), v.len());
        assert_eq!(flat[14], 1.0);
        assert_eq!(&flat[25..], &[1.0, 2.0, 3.0]);
        assert!(flat.iter().all(|x| x.is_finite()));
    }
}
