//! Numeric encoding of hourly weather observations.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ingest::WeatherRecord;
use crate::{Error, Result};

const COMPASS: [&str; 16] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
];

/// Converts a compass point to a bearing in radians (0 = North, clockwise).
///
/// Returns the bearing together with a flag that is set for `CALM` and `VAR`,
/// which carry no direction and map to 0.
pub fn wind_to_radians(dir: &str) -> Result<(f64, bool)> {
    let d = dir.trim().to_ascii_uppercase();
    if d == "CALM" || d == "VAR" || d == "VARIABLE" {
        return Ok((0.0, true));
    }
    COMPASS
        .iter()
        .position(|c| *c == d)
        .map(|i| (i as f64 * PI / 8.0, false))
        .ok_or_else(|| Error::Encoding(format!("unknown wind direction `{dir}`")))
}

/// Ordered list of condition categories; index `i` is one-hot position `i`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionVocab {
    pub categories: Vec<String>,
}

impl ConditionVocab {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(categories: I) -> Self {
        let mut out: Vec<String> = Vec::new();
        for c in categories {
            let c = c.into();
            if !out.contains(&c) {
                out.push(c);
            }
        }
        ConditionVocab { categories: out }
    }

    /// Distinct conditions in sorted order.
    pub fn fit(records: &[WeatherRecord]) -> Self {
        let mut seen: Vec<String> = records.iter().map(|r| r.condition.trim().to_string()).collect();
        seen.sort();
        seen.dedup();
        ConditionVocab { categories: seen }
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// One-hot vector; all zeros for an unseen category.
    pub fn one_hot(&self, condition: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        if let Some(i) = self.categories.iter().position(|c| c == condition.trim()) {
            v[i] = 1.0;
        }
        v
    }
}

pub const WEATHER_NUMERIC: [&str; 8] = [
    "temperature_f",
    "dew_point_f",
    "humidity_pct",
    "wind_speed_mph",
    "wind_gust_mph",
    "pressure_inhg",
    "wind_bearing_rad",
    "wind_calm_or_variable",
];

/// Column names of [`encode_weather`] output for the given vocabulary.
pub fn weather_column_names(vocab: &ConditionVocab) -> Vec<String> {
    WEATHER_NUMERIC
        .iter()
        .map(|s| s.to_string())
        .chain(vocab.categories.iter().map(|c| format!("condition_{}", c.replace(' ', "_"))))
        .collect()
}

/// Numeric fields, wind bearing plus calm/variable flag, then the one-hot
/// condition.
pub fn encode_weather(w: &WeatherRecord, vocab: &ConditionVocab) -> Result<Vec<f64>> {
    let (bearing, calm) = wind_to_radians(&w.wind_direction)?;
    let mut v = vec![
        w.temperature_f,
        w.dew_point_f,
        w.humidity_pct,
        w.wind_speed_mph,
        w.wind_gust_mph,
        w.pressure_inhg,
        bearing,
        if calm { 1.0 } else { 0.0 },
    ];
    v.extend(vocab.one_hot(&w.condition));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn rec(condition: &str, dir: &str) -> WeatherRecord {
        WeatherRecord {
            time: Utc.with_ymd_and_hms(2016, 7, 1, 0, 0, 0).unwrap(),
            temperature_f: 70.0,
            dew_point_f: 55.0,
            humidity_pct: 55.0,
            wind_direction: dir.into(),
            wind_speed_mph: 8.0,
            wind_gust_mph: 0.0,
            pressure_inhg: 29.92,
            condition: condition.into(),
        }
    }

    #[test]
    fn compass_points() {
        assert_eq!(wind_to_radians("N").unwrap(), (0.0, false));
        assert!((wind_to_radians("E").unwrap().0 - PI / 2.0).abs() < 1e-15);
        assert!((wind_to_radians("SW").unwrap().0 - 5.0 * PI / 4.0).abs() < 1e-15);
        assert!((wind_to_radians("NNW").unwrap().0 - 337.5f64.to_radians()).abs() < 1e-12);
        assert_eq!(wind_to_radians("CALM").unwrap(), (0.0, true));
        assert_eq!(wind_to_radians("VAR").unwrap(), (0.0, true));
        assert!(matches!(wind_to_radians("NORTHISH"), Err(Error::Encoding(_))));
    }

    #[test]
    fn one_hot_with_unseen_category() {
        let vocab = ConditionVocab::new(["Fair", "Cloudy"]);
        let fair = encode_weather(&rec("Fair", "N"), &vocab).unwrap();
        assert_eq!(&fair[8..], &[1.0, 0.0]);
        let hail = encode_weather(&rec("Hail", "N"), &vocab).unwrap();
        assert_eq!(&hail[8..], &[0.0, 0.0]);
    }

    #[test]
    fn fitted_vocab_is_sorted() {
        let v = ConditionVocab::fit(&[rec("Rain", "N"), rec("Fair", "N"), rec("Rain", "S")]);
        assert_eq!(v.categories, vec!["Fair", "Rain"]);
    }

    #[test]
    fn numeric_fields_pass_through() {
        let vocab = ConditionVocab::new(["Fair"]);
        let v = encode_weather(&rec("Fair", "E"), &vocab).unwrap();
        assert_eq!(v.len(), weather_column_names(&vocab).len());
        assert_eq!(v[2], 55.0);
        assert_eq!(v[5], 29.92);
    }
}
