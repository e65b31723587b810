//! Smooth hourly weather with categorical sky conditions.

use chrono::{DateTime, Duration, Timelike, Utc};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::ingest::WeatherRecord;

const COMPASS: [&str; 16] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
];

/// AR(1) step with unit stationary variance.
fn ar<R: Rng>(rng: &mut R, x: f64, rho: f64) -> f64 {
    let e: f64 = rng.sample(StandardNormal);
    rho * x + (1.0 - rho * rho).sqrt() * e
}

fn f_to_c(f: f64) -> f64 {
    (f - 32.0) * 5.0 / 9.0
}

/// Relative humidity from temperature and dew point (Magnus formula).
fn humidity(temp_f: f64, dew_f: f64) -> f64 {
    let g = |c: f64| (17.625 * c / (243.04 + c)).exp();
    (100.0 * g(f_to_c(dew_f)) / g(f_to_c(temp_f))).clamp(0.0, 100.0)
}

/// Severity used when weather is allowed to delay flights.
pub fn severity(condition: &str) -> f64 {
    match condition {
        "Light Rain" | "Fog" => 1.0,
        "Haze" | "Overcast" => 0.5,
        _ => 0.0,
    }
}

/// One record per hour from `start` for `hours` hours.
pub fn generate_weather<R: Rng>(rng: &mut R, start: DateTime<Utc>, hours: usize) -> Vec<WeatherRecord> {
    let (mut temp, mut spread, mut wind, mut dir, mut press, mut cloud) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(hours);
    for h in 0..hours {
        temp = ar(rng, temp, 0.9);
        spread = ar(rng, spread, 0.9);
        wind = ar(rng, wind, 0.8);
        press = ar(rng, press, 0.97);
        cloud = ar(rng, cloud, 0.9);
        let step: f64 = rng.sample(StandardNormal);
        dir += 0.3 * step;
        let t = start + Duration::hours(h as i64);
        let hour = f64::from(t.hour());
        let temperature_f = (68.0 + 8.0 * (2.0 * PI * (hour - 9.0) / 24.0).sin() + 2.5 * temp).round();
        let dew_point_f = (temperature_f - (9.0 + 3.0 * spread).max(0.5)).round();
        let humidity_pct = humidity(temperature_f, dew_point_f).round();
        // afternoon sea breeze
        let speed = (8.0 + 4.0 * (2.0 * PI * (hour - 10.0) / 24.0).sin() + 3.5 * wind).max(0.0);
        let (wind_direction, wind_speed_mph) = if speed < 3.0 {
            ("CALM".to_string(), 0.0)
        } else if rng.random::<f64>() < 0.03 {
            ("VAR".to_string(), speed.round())
        } else {
            // westerly on average
            let bearing = (270.0 + 40.0 * dir.sin()).rem_euclid(360.0);
            let idx = ((bearing / 22.5).round() as usize) % 16;
            (COMPASS[idx].to_string(), speed.round())
        };
        let wind_gust_mph = if wind_speed_mph > 14.0 && rng.random::<f64>() < 0.5 {
            (wind_speed_mph + rng.random_range(5.0..12.0)).round()
        } else {
            0.0
        };
        let pressure_inhg = ((29.92 + 0.06 * press) * 100.0).round() / 100.0;
        let condition = if humidity_pct >= 93.0 {
            "Fog"
        } else if cloud > 1.8 {
            "Light Rain"
        } else if cloud > 1.2 {
            "Overcast"
        } else if cloud > 0.5 {
            "Mostly Cloudy"
        } else if cloud > -0.3 {
            "Partly Cloudy"
        } else if humidity_pct >= 80.0 {
            "Haze"
        } else {
            "Fair"
        };
        out.push(WeatherRecord {
            time: t,
            temperature_f,
            dew_point_f,
            humidity_pct,
            wind_direction,
            wind_speed_mph,
            wind_gust_mph,
            pressure_inhg,
            condition: condition.into(),
        });
    }
    out
}
