//! Synthetic airport scenarios with a known link from tarmac congestion to
//! departure delay.
//!
//! A latent hourly congestion load sets the pace of surface traffic (taxi
//! speeds, holding). A departure's congestion delay is proportional to the
//! mean load over a window that ends a fixed lead time before its scheduled
//! gate-out, so the traffic observed in that window carries information
//! about the delay. Delay also inherits lateness from the inbound leg and a
//! skewed noise term calibrated to the configured mean and spread.
//!
//! The golden scenario used by the end-to-end checks is [`golden_config`];
//! its output digests are pinned in [`GOLDEN_DIGESTS`].

mod config;
mod latent;
mod motion;
mod weather;

pub use config::{DelayTargets, ScenarioConfig};
pub use latent::{calibrate_noise, shape_std, Congestion, NoiseModel, TAIL_SHAPE};
pub use motion::{Layout, Leg, Pace, Path, Rect, LIFTOFF_SPEED, TOUCHDOWN_SPEED};
pub use weather::{generate_weather, severity};

use chrono::{DateTime, Duration, NaiveTime, Timelike, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path as FsPath, PathBuf};

use crate::eval::{delay_stats, derive_seed, sha256_hex, DelayStats};
use crate::geo::EARTH_RADIUS_M;
use crate::ingest::{
    latest_at_or_before, write_gps, write_schedule, write_weather, FlightRecord, GpsPoint, WeatherRecord,
};
use crate::zones::{ZoneLabel, ZoneMap};
use crate::{Error, Result};

const AIRLINES: [&str; 12] = ["AA", "UA", "DL", "WN", "AS", "B6", "NK", "F9", "HA", "VX", "G4", "SY"];
const AIRPORTS: [&str; 40] = [
    "SFO", "JFK", "ORD", "SEA", "DEN", "LAS", "PHX", "DFW", "ATL", "BOS", "IAD", "MSP", "DTW", "SLC", "PDX", "SJC",
    "OAK", "SMF", "HNL", "OGG", "EWR", "IAH", "MIA", "MCO", "CLT", "PHL", "SAN", "AUS", "MSY", "STL", "BNA", "RDU",
    "MCI", "SAT", "ABQ", "TUS", "BOI", "ANC", "LAX", "SNA",
];
/// Relative departure intensity per hour of day; none between 3 and 5 AM.
const HOURLY_INTENSITY: [f64; 24] = [
    1.0, 0.6, 0.3, 0.0, 0.0, 1.5, 5.0, 7.0, 7.5, 7.0, 6.5, 6.5, 6.5, 6.5, 6.5, 7.0, 7.0, 7.5, 7.5, 7.0, 6.0, 5.0, 3.5,
    2.0,
];

/// Hourly intensity relative to the busiest hour.
fn activity_profile() -> [f64; 24] {
    let peak = HOURLY_INTENSITY.iter().copied().fold(0.0, f64::max);
    HOURLY_INTENSITY.map(|v| v / peak)
}

/// Latent terms behind one departure's delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub flight_id: String,
    pub congestion_load: f64,
    pub congestion_term: f64,
    pub propagation_term: f64,
    pub noise_term: f64,
    pub weather_term: f64,
    pub departure_delay: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Departures from and arrivals to the airport, by scheduled departure.
    pub schedule: Vec<FlightRecord>,
    pub gps: Vec<GpsPoint>,
    pub weather: Vec<WeatherRecord>,
    /// One row per departure, in schedule order.
    pub truth: Vec<GroundTruth>,
    /// Minutes of delay per unit of congestion load.
    pub congestion_coef: f64,
    pub noise: NoiseModel,
}

struct Inbound {
    sched_arr: DateTime<Utc>,
    origin: usize,
    turnaround: i64,
}

struct Plan {
    sched_dep: DateTime<Utc>,
    airline: usize,
    dest: usize,
    inbound: Option<Inbound>,
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

fn stream(config: &ScenarioConfig, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(config.seed, name))
}

fn weighted(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(weights).map_err(|e| Error::Config(format!("bad sampling weights: {e}")))
}

/// Draws the schedule skeleton, sorted by scheduled departure.
fn plan_departures(config: &ScenarioConfig, start: DateTime<Utc>, n_airports: usize) -> Result<Vec<Plan>> {
    let mut rng = stream(config, "schedule");
    let hours = weighted(&HOURLY_INTENSITY)?;
    let airline_w: Vec<f64> = (0..config.n_airlines).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let airport_w: Vec<f64> = (0..n_airports).map(|k| 1.0 / (k as f64 + 1.0).powf(0.7)).collect();
    let (airlines, airports) = (weighted(&airline_w)?, weighted(&airport_w)?);
    let mut plans = Vec::new();
    for day in 0..i64::from(config.days) {
        let midnight = start + Duration::days(day);
        for _ in 0..config.departures_per_day {
            let h = hours.sample(&mut rng) as i64;
            let m = 5 * rng.random_range(0..12i64);
            let sched_dep = midnight + Duration::minutes(60 * h + m);
            let airline = airlines.sample(&mut rng);
            let dest = airports.sample(&mut rng);
            let turnaround = rng.random_range(45..=180i64);
            let origin = airports.sample(&mut rng);
            let has_inbound = rng.random::<f64>() < config.inbound_probability;
            let sched_arr = sched_dep - Duration::minutes(turnaround);
            let quiet = (3..5).contains(&sched_arr.hour());
            let inbound = (has_inbound && !quiet && sched_arr >= start).then_some(Inbound {
                sched_arr,
                origin,
                turnaround,
            });
            plans.push(Plan {
                sched_dep,
                airline,
                dest,
                inbound,
            });
        }
    }
    plans.sort_by_key(|p| p.sched_dep);
    Ok(plans)
}

/// Adds fix noise and rare far-off glitches, keeping the first two and last
/// three fixes of each track intact.
fn perturb<R: Rng>(rng: &mut R, points: &mut [GpsPoint], config: &ScenarioConfig, map: &ZoneMap) {
    let deg_lat = 180.0 / (std::f64::consts::PI * EARTH_RADIUS_M);
    let noise = Normal::new(0.0, config.position_noise_m).expect("nonnegative std");
    let n = points.len();
    let b = &map.bbox;
    for (i, p) in points.iter_mut().enumerate() {
        let deg_lon = deg_lat / p.latitude.to_radians().cos();
        let (dn, de) = (noise.sample(rng), noise.sample(rng));
        p.latitude += dn * deg_lat;
        p.longitude += de * deg_lon;
        if i >= 2 && i + 3 < n && rng.random::<f64>() < config.jitter_rate {
            // jump to the far corner of the box
            let inset = 0.02;
            let lat = if p.latitude > 0.5 * (b.lat_min + b.lat_max) {
                b.lat_min + inset * (b.lat_max - b.lat_min)
            } else {
                b.lat_max - inset * (b.lat_max - b.lat_min)
            };
            let lon = if p.longitude > 0.5 * (b.lon_min + b.lon_max) {
                b.lon_min + inset * (b.lon_max - b.lon_min)
            } else {
                b.lon_max - inset * (b.lon_max - b.lon_min)
            };
            p.latitude = lat;
            p.longitude = lon;
        }
        p.latitude = round_to(p.latitude, 1e-7).clamp(b.lat_min, b.lat_max);
        p.longitude = round_to(p.longitude, 1e-7).clamp(b.lon_min, b.lon_max);
        p.speed = p.speed.map(|s| round_to(s, 0.01));
    }
}

fn flight_id(airline: &str, counters: &mut BTreeMap<(usize, i64), u32>, a: usize, t: DateTime<Utc>, start: DateTime<Utc>) -> String {
    let day = (t - start).num_days();
    let c = counters.entry((a, day)).or_insert(100);
    *c += 1;
    format!("{airline}{:04}-{}", *c, t.format("%Y%m%d"))
}

/// Generates schedule, surface traffic, weather and the latent delay terms.
pub fn generate_scenario(config: &ScenarioConfig, map: &ZoneMap) -> Result<Scenario> {
    config.validate()?;
    let layout = Layout::from_map(map)?;
    let airports: Vec<&str> = AIRPORTS.iter().copied().filter(|a| *a != config.airport).collect();
    if config.n_airports > airports.len() || config.n_airlines > AIRLINES.len() {
        return Err(Error::Config(format!(
            "at most {} airports and {} airlines are available",
            airports.len(),
            AIRLINES.len()
        )));
    }
    let start = config.start_date.and_time(NaiveTime::MIN).and_utc();
    let hours = 24 * config.days as usize + 24;
    let congestion = Congestion::generate(
        &mut stream(config, "congestion"),
        start,
        hours,
        config.congestion_timescale_h,
        config.congestion_volatility,
    )
    .with_activity(activity_profile());
    let weather = generate_weather(&mut stream(config, "weather"), start, hours);
    let plans = plan_departures(config, start, config.n_airports)?;

    // origin-side terms of each inbound leg and route block times
    let mut rng = stream(config, "legs");
    let block: Vec<i64> = (0..airports.len()).map(|_| 5 * rng.random_range(12..=66i64)).collect();
    struct Leg {
        arr_delay: i64,
        elapsed_err: i64,
    }
    let elapsed_err = |rng: &mut ChaCha8Rng| -> i64 { (6.0 * rng.sample::<f64, _>(StandardNormal)).round() as i64 };
    let legs: Vec<Option<Leg>> = plans
        .iter()
        .map(|p| {
            p.inbound.as_ref().map(|_| {
                let xi: f64 = rng.sample(StandardNormal);
                Leg {
                    arr_delay: (-6.0 + 8.0 * (1.1 * xi).exp()).round() as i64,
                    elapsed_err: elapsed_err(&mut rng),
                }
            })
        })
        .collect();

    // deterministic delay parts, then calibrated noise
    let loads: Vec<f64> = plans
        .iter()
        .map(|p| {
            let end = p.sched_dep - Duration::minutes(config.congestion_lead_min);
            congestion.backlog(end, config.congestion_window_min)
        })
        .collect();
    let coef = match config.congestion_share {
        Some(share) => {
            let v = variance(&loads);
            if v > 0.0 {
                (share * config.targets.std * config.targets.std / v).sqrt()
            } else {
                0.0
            }
        }
        None => config.congestion_coef,
    };
    let mut parts = Vec::with_capacity(plans.len());
    for ((p, leg), &load) in plans.iter().zip(&legs).zip(&loads) {
        let c = coef * load;
        let prop = match (&p.inbound, leg) {
            (Some(inb), Some(l)) => (l.arr_delay - (inb.turnaround - config.min_turn_min)).max(0),
            _ => 0,
        };
        let w = latest_at_or_before(&weather, p.sched_dep)
            .map_or(0.0, |i| config.weather_coef * severity(&weather[i].condition));
        parts.push((load, c, prop, w));
    }
    let mut noise_rng = stream(config, "noise");
    let xi: Vec<f64> = plans.iter().map(|_| noise_rng.sample(StandardNormal)).collect();
    let base: Vec<f64> = parts.iter().map(|&(_, c, prop, w)| c + prop as f64 + w).collect();
    let noise = calibrate_noise(&base, &xi, &config.targets, config.noise_std)?;

    let mut counters = BTreeMap::new();
    let mut schedule = Vec::with_capacity(plans.len() * 2);
    let mut truth = Vec::with_capacity(plans.len());
    let mut gps = Vec::new();
    let mut gps_rng = stream(config, "gps");
    let n_runways = layout.runways.len();
    let pick_runway = |rng: &mut ChaCha8Rng, preferred: usize| -> usize {
        if n_runways == 1 || rng.random::<f64>() < 0.7 {
            preferred
        } else {
            rng.random_range(0..n_runways)
        }
    };
    for (k, (p, leg)) in plans.iter().zip(&legs).enumerate() {
        let airline = AIRLINES[p.airline];
        let tail = format!("N{:05}", k + 1);
        let (load, c, prop, w) = parts[k];
        let n = noise.sample(xi[k]);
        let total = (c + prop as f64 + w + n).round() as i64;
        let (nas, weather_min) = (c.round() as i64, w.round() as i64);
        let id = flight_id(airline, &mut counters, p.airline, p.sched_dep, start);

        if let (Some(inb), Some(l)) = (&p.inbound, leg) {
            let b = block[inb.origin];
            let sched_dep = inb.sched_arr - Duration::minutes(b);
            let actual_elapsed = (b + l.elapsed_err).max(20);
            let err = actual_elapsed - b;
            let dep_delay = l.arr_delay - err;
            let actual_arr = inb.sched_arr + Duration::minutes(l.arr_delay);
            let parking = gps_rng.random::<f64>() < config.parking_share;
            let gate = layout.sample_gate(&mut gps_rng, parking);
            let runway = pick_runway(&mut gps_rng, n_runways - 1);
            let pace = Pace::at_load(&mut gps_rng, congestion.load(actual_arr));
            let path = layout.arrival_path(gate, parking, runway, &pace);
            let wheels_on = actual_arr - Duration::seconds(path.whole_seconds());
            let arr_id = flight_id(airline, &mut counters, p.airline, sched_dep, start);
            let mut pts = path.sample(&arr_id, wheels_on, config.gps_interval_s);
            perturb(&mut gps_rng, &mut pts, config, map);
            gps.extend(pts);
            let (a_nas, a_late) = if l.arr_delay > 0 {
                ((0.3 * l.arr_delay as f64).round() as i64, (0.25 * l.arr_delay as f64).round() as i64)
            } else {
                (0, 0)
            };
            schedule.push(FlightRecord {
                flight_id: arr_id,
                airline: airline.into(),
                tail_number: tail.clone(),
                origin: airports[inb.origin].into(),
                destination: config.airport.clone(),
                sched_dep,
                actual_dep: sched_dep + Duration::minutes(dep_delay),
                sched_elapsed_min: b,
                actual_elapsed_min: actual_elapsed,
                sched_arr: inb.sched_arr,
                actual_arr,
                wheels_on,
                arr_delay_carrier: l.arr_delay - a_nas - a_late,
                arr_delay_weather: 0,
                arr_delay_nas: a_nas,
                arr_delay_security: 0,
                arr_delay_late_aircraft: a_late,
                arr_delay: l.arr_delay,
                dep_delay_carrier: dep_delay,
                dep_delay_weather: 0,
                dep_delay_nas: 0,
                dep_delay_security: 0,
                dep_delay_late_aircraft: 0,
                dep_delay,
            });
        }

        let b = block[p.dest];
        let actual_dep = p.sched_dep + Duration::minutes(total);
        let err = elapsed_err(&mut gps_rng).max(20 - b);
        let sched_arr = p.sched_dep + Duration::minutes(b);
        let arr_delay = total + err;
        let actual_arr = sched_arr + Duration::minutes(arr_delay);
        let taxi_in = gps_rng.random_range(4..=12i64);
        let parking = gps_rng.random::<f64>() < config.parking_share;
        let gate = layout.sample_gate(&mut gps_rng, parking);
        let runway = pick_runway(&mut gps_rng, 0);
        let pace = Pace::at_load(&mut gps_rng, congestion.load(actual_dep));
        let mut pts = layout
            .departure_path(gate, parking, runway, &pace)
            .sample(&id, actual_dep, config.gps_interval_s);
        perturb(&mut gps_rng, &mut pts, config, map);
        gps.extend(pts);
        schedule.push(FlightRecord {
            flight_id: id.clone(),
            airline: airline.into(),
            tail_number: tail,
            origin: config.airport.clone(),
            destination: airports[p.dest].into(),
            sched_dep: p.sched_dep,
            actual_dep,
            sched_elapsed_min: b,
            actual_elapsed_min: b + err,
            sched_arr,
            actual_arr,
            wheels_on: actual_arr - Duration::minutes(taxi_in),
            arr_delay_carrier: err,
            arr_delay_weather: 0,
            arr_delay_nas: 0,
            arr_delay_security: 0,
            arr_delay_late_aircraft: total,
            arr_delay,
            dep_delay_carrier: total - nas - prop - weather_min,
            dep_delay_weather: weather_min,
            dep_delay_nas: nas,
            dep_delay_security: 0,
            dep_delay_late_aircraft: prop,
            dep_delay: total,
        });
        truth.push(GroundTruth {
            flight_id: id,
            congestion_load: load,
            congestion_term: c,
            propagation_term: prop as f64,
            noise_term: n,
            weather_term: w,
            departure_delay: total,
        });
    }
    schedule.sort_by(|a, b| a.sched_dep.cmp(&b.sched_dep).then_with(|| a.flight_id.cmp(&b.flight_id)));
    gps.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.vehicle_id.cmp(&b.vehicle_id)));
    let order: BTreeMap<&str, usize> = schedule
        .iter()
        .enumerate()
        .map(|(i, f)| (f.flight_id.as_str(), i))
        .collect();
    truth.sort_by_key(|t| order[t.flight_id.as_str()]);
    Ok(Scenario {
        schedule,
        gps,
        weather,
        truth,
        congestion_coef: coef,
        noise,
    })
}

pub const SCHEDULE_FILE: &str = "schedule.csv";
pub const GPS_FILE: &str = "gps.csv";
pub const WEATHER_FILE: &str = "weather.csv";
pub const TRUTH_FILE: &str = "ground_truth.csv";

/// SHA-256 of each golden output file, as JSON keyed by file name.
pub const GOLDEN_DIGESTS: &str = include_str!("../../assets/golden/digests.json");

/// Configuration of the golden scenario: one week at the default airport.
pub fn golden_config() -> ScenarioConfig {
    ScenarioConfig::from_json(include_str!("../../assets/golden/scenario.json")).expect("bundled golden config is valid")
}

impl Scenario {
    /// CSV bytes of the four output files, keyed by file name.
    pub fn to_csv(&self) -> Result<BTreeMap<&'static str, Vec<u8>>> {
        let mut files = BTreeMap::new();
        let mut buf = Vec::new();
        write_schedule(&mut buf, &self.schedule)?;
        files.insert(SCHEDULE_FILE, std::mem::take(&mut buf));
        write_gps(&mut buf, &self.gps)?;
        files.insert(GPS_FILE, std::mem::take(&mut buf));
        write_weather(&mut buf, &self.weather)?;
        files.insert(WEATHER_FILE, std::mem::take(&mut buf));
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            if self.truth.is_empty() {
                w.write_record([
                    "flight_id",
                    "congestion_load",
                    "congestion_term",
                    "propagation_term",
                    "noise_term",
                    "weather_term",
                    "departure_delay",
                ])?;
            }
            for t in &self.truth {
                w.serialize(t)?;
            }
            w.flush()?;
        }
        files.insert(TRUTH_FILE, buf);
        Ok(files)
    }

    /// SHA-256 of each output file.
    pub fn digests(&self) -> Result<BTreeMap<String, String>> {
        Ok(self
            .to_csv()?
            .into_iter()
            .map(|(name, bytes)| (name.to_string(), sha256_hex(&bytes)))
            .collect())
    }

    /// Writes the four CSV files into `dir`, creating it if needed.
    pub fn write(&self, dir: &FsPath) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.to_csv()?
            .into_iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                std::fs::write(&path, bytes)?;
                Ok(path)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub departures: usize,
    pub arrivals: usize,
    pub gps_points: usize,
    pub weather_records: usize,
    pub delay: DelayStats,
    /// Departures whose five delay components do not add up to the total.
    pub identity_violations: usize,
    /// GPS fixes per zone label, plus `none` for unlabeled fixes.
    pub zone_points: BTreeMap<String, usize>,
    /// Variance of the congestion term over the variance of the delay.
    pub congestion_share: f64,
}

fn variance(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Delay statistics, per-zone traffic and the component-sum check.
pub fn validate_scenario(s: &Scenario, airport: &str, map: &ZoneMap) -> ScenarioReport {
    let deps: Vec<&FlightRecord> = s.schedule.iter().filter(|f| f.origin == airport).collect();
    let delays: Vec<f64> = deps.iter().map(|f| f.dep_delay as f64).collect();
    let mut zone_points: BTreeMap<String, usize> = ZoneLabel::ALL.iter().map(|z| (z.to_string(), 0)).collect();
    zone_points.insert("none".into(), 0);
    for p in &s.gps {
        let key = map.classify(p.latitude, p.longitude).map_or("none".to_string(), |z| z.to_string());
        *zone_points.entry(key).or_default() += 1;
    }
    let c: Vec<f64> = s.truth.iter().map(|t| t.congestion_term).collect();
    let var_d = variance(&delays);
    ScenarioReport {
        departures: deps.len(),
        arrivals: s.schedule.iter().filter(|f| f.destination == airport).count(),
        gps_points: s.gps.len(),
        weather_records: s.weather.len(),
        delay: delay_stats(&delays),
        identity_violations: deps
            .iter()
            .filter(|f| f.departure_label().components.total() != f.dep_delay as f64)
            .count(),
        zone_points,
        congestion_share: if var_d > 0.0 { variance(&c) / var_d } else { 0.0 },
    }
}
