use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Summary statistics the departure delays are calibrated to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayTargets {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    /// Share of departures with delay ≤ 0. Only checked for feasibility and
    /// reported; mean, std and median drive the calibration.
    pub on_time: f64,
}

impl Default for DelayTargets {
    fn default() -> Self {
        DelayTargets {
            mean: 16.0,
            std: 44.7,
            median: 1.0,
            on_time: 0.494,
        }
    }
}

impl DelayTargets {
    /// Rejects target combinations no distribution can meet.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if ![self.mean, self.std, self.median, self.on_time].iter().all(|v| v.is_finite()) {
            return bad("delay targets must be finite".into());
        }
        if self.std < 0.0 {
            return bad(format!("target std must be nonnegative, got {}", self.std));
        }
        if !(0.0..=1.0).contains(&self.on_time) {
            return bad(format!("on-time fraction must lie in [0, 1], got {}", self.on_time));
        }
        if self.std == 0.0 {
            let on_time = if self.mean <= 0.0 { 1.0 } else { 0.0 };
            if self.median != self.mean || self.on_time != on_time {
                return bad(format!(
                    "a zero-spread delay of {} min has median {} and on-time fraction {on_time}",
                    self.mean, self.mean
                ));
            }
        }
        // |mean − median| ≤ std holds for every distribution
        if (self.mean - self.median).abs() > self.std {
            return bad(format!(
                "mean {} and median {} are more than one std ({}) apart",
                self.mean, self.median, self.std
            ));
        }
        if self.median > 0.0 && self.on_time > 0.5 {
            return bad("a positive median needs at most half the flights on time".into());
        }
        if self.median < 0.0 && self.on_time < 0.5 {
            return bad("a negative median needs at least half the flights on time".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub airport: String,
    pub start_date: NaiveDate,
    pub days: u32,
    pub departures_per_day: u32,
    pub n_airlines: usize,
    pub n_airports: usize,
    /// Probability that a departure's aircraft arrives on a scheduled
    /// inbound leg the same day.
    pub inbound_probability: f64,
    /// Minimum gate time between an inbound arrival and the next departure.
    pub min_turn_min: i64,
    /// Minutes of departure delay per unit of congestion load (mean load 1).
    /// Ignored when `congestion_share` is set.
    pub congestion_coef: f64,
    /// Share of the target delay variance to give the congestion term. When
    /// set, the coefficient is solved from the realized loads.
    pub congestion_share: Option<f64>,
    /// Log-scale standard deviation of the congestion load.
    pub congestion_volatility: f64,
    /// Autocorrelation time of the latent congestion, in hours.
    pub congestion_timescale_h: f64,
    /// A departure's congestion term is the mean load over the
    /// `congestion_window_min` minutes that end `congestion_lead_min`
    /// minutes before its scheduled gate-out.
    pub congestion_lead_min: i64,
    pub congestion_window_min: i64,
    /// Minutes of delay per unit of weather severity; off by default.
    pub weather_coef: f64,
    /// Standard deviation of the delay noise. `None` derives it from the
    /// std target; `Some(0.0)` disables the noise term.
    pub noise_std: Option<f64>,
    pub targets: DelayTargets,
    pub gps_interval_s: i64,
    pub position_noise_m: f64,
    /// Share of GPS fixes replaced by far-off glitches.
    pub jitter_rate: f64,
    /// Share of departures pushed from the parking area instead of the apron.
    pub parking_share: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 20160704,
            airport: "LAX".into(),
            start_date: NaiveDate::from_ymd_opt(2016, 7, 4).expect("valid date"),
            days: 7,
            departures_per_day: 285,
            n_airlines: 8,
            n_airports: 24,
            inbound_probability: 0.85,
            min_turn_min: 35,
            congestion_coef: 50.0,
            congestion_share: Some(0.5),
            congestion_volatility: 0.6,
            congestion_timescale_h: 6.0,
            congestion_lead_min: 240,
            congestion_window_min: 60,
            weather_coef: 0.0,
            noise_std: None,
            targets: DelayTargets::default(),
            gps_interval_s: 15,
            position_noise_m: 3.0,
            jitter_rate: 0.005,
            parking_share: 0.25,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, m: &str| if ok { Ok(()) } else { Err(Error::Config(m.into())) };
        check(self.days >= 1, "days must be at least 1")?;
        check(!self.airport.is_empty(), "airport code must not be empty")?;
        check(self.n_airlines >= 1, "n_airlines must be at least 1")?;
        check(self.n_airports >= 1, "n_airports must be at least 1")?;
        check((0.0..=1.0).contains(&self.inbound_probability), "inbound_probability must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.parking_share), "parking_share must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.jitter_rate), "jitter_rate must lie in [0, 1]")?;
        check(self.min_turn_min >= 0, "min_turn_min must be nonnegative")?;
        check(self.congestion_coef.is_finite(), "congestion_coef must be finite")?;
        check(
            self.congestion_share.is_none_or(|s| (0.0..=1.0).contains(&s)),
            "congestion_share must lie in [0, 1]",
        )?;
        check(self.weather_coef.is_finite(), "weather_coef must be finite")?;
        check(
            self.congestion_volatility >= 0.0 && self.congestion_volatility.is_finite(),
            "congestion_volatility must be nonnegative",
        )?;
        check(self.congestion_timescale_h > 0.0, "congestion_timescale_h must be positive")?;
        check(self.congestion_lead_min >= 0, "congestion_lead_min must be nonnegative")?;
        check(self.congestion_window_min >= 0, "congestion_window_min must be nonnegative")?;
        check(self.noise_std.is_none_or(|s| s >= 0.0 && s.is_finite()), "noise_std must be nonnegative")?;
        check(self.gps_interval_s >= 1, "gps_interval_s must be at least 1")?;
        check(self.position_noise_m >= 0.0, "position_noise_m must be nonnegative")?;
        self.targets.validate()
    }

    pub fn from_json(text: &str) -> Result<ScenarioConfig> {
        let c: ScenarioConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}
