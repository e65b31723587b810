//! Latent congestion process and the calibrated delay noise.

use chrono::{DateTime, Timelike, Utc};
use rand::Rng;
use rand_distr::StandardNormal;

use super::DelayTargets;
use crate::{Error, Result};

/// Hourly AR(1) series rescaled to zero mean and unit variance over its
/// horizon, linearly interpolated between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Congestion {
    start: DateTime<Utc>,
    knots: Vec<f64>,
    volatility: f64,
    /// Volatility multiplier per UTC hour of day.
    activity: [f64; 24],
}

impl Congestion {
    pub fn generate<R: Rng>(rng: &mut R, start: DateTime<Utc>, hours: usize, timescale_h: f64, volatility: f64) -> Congestion {
        let rho = (-1.0 / timescale_h).exp();
        let innov = (1.0 - rho * rho).sqrt();
        let mut z: f64 = rng.sample(StandardNormal);
        let mut knots = Vec::with_capacity(hours + 1);
        for _ in 0..=hours {
            knots.push(z);
            let e: f64 = rng.sample(StandardNormal);
            z = rho * z + innov * e;
        }
        // pin the sample spread so short horizons keep the intended volatility
        let n = knots.len() as f64;
        let m = knots.iter().sum::<f64>() / n;
        let sd = (knots.iter().map(|k| (k - m) * (k - m)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            knots.iter_mut().for_each(|k| *k = (*k - m) / sd);
        }
        Congestion {
            start,
            knots,
            volatility,
            activity: [1.0; 24],
        }
    }

    /// Scales the volatility by hour of day, so quiet hours stay near the
    /// mean load.
    pub fn with_activity(mut self, activity: [f64; 24]) -> Congestion {
        self.activity = activity;
        self
    }

    /// Standardized latent value at `t`, held constant outside the series.
    pub fn latent(&self, t: DateTime<Utc>) -> f64 {
        let h = (t - self.start).num_seconds() as f64 / 3600.0;
        if h <= 0.0 {
            return self.knots[0];
        }
        let i = h.floor() as usize;
        if i + 1 >= self.knots.len() {
            return *self.knots.last().expect("nonempty");
        }
        let f = h - i as f64;
        self.knots[i] * (1.0 - f) + self.knots[i + 1] * f
    }

    /// Load `exp(σ·z − σ²/2)`: positive with mean 1. `σ` is the volatility
    /// times the activity of `t`'s hour.
    pub fn load(&self, t: DateTime<Utc>) -> f64 {
        let s = self.volatility * self.activity[t.hour() as usize];
        (s * self.latent(t) - 0.5 * s * s).exp()
    }
}

impl Congestion {
    /// Mean load over `[t − minutes, t]`, by the trapezoid rule on a
    /// one-minute grid.
    pub fn backlog(&self, t: DateTime<Utc>, minutes: i64) -> f64 {
        if minutes == 0 {
            return self.load(t);
        }
        let sum: f64 = (0..=minutes)
            .map(|m| {
                let w = if m == 0 || m == minutes { 0.5 } else { 1.0 };
                w * self.load(t - chrono::Duration::minutes(m))
            })
            .sum();
        sum / minutes as f64
    }
}

/// Delay noise `shift + scale·h_a(ξ)/sd(h_a)` for a standard normal `ξ`.
/// `h_a` is `(e^{kξ} − 1)/k` above zero (a lognormal-like right tail with
/// fixed `k`) and `a·ξ` below, so `left` in `[0, 1]` sets how tightly early
/// departures cluster and with it the gap between mean and median.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseModel {
    pub shift: f64,
    pub scale: f64,
    pub left: f64,
}

/// Smallest left-side spread the calibration will pick.
pub const MIN_LEFT: f64 = 0.1;

/// Right-tail exponent `k` of the noise shape.
pub const TAIL_SHAPE: f64 = 0.8;
// Φ(k) and Φ(2k) for k = 0.8
const PHI_K: f64 = 0.788_144_601_416_603_4;
const PHI_2K: f64 = 0.945_200_708_300_442_1;

fn shape_fn(left: f64, xi: f64) -> f64 {
    if xi > 0.0 {
        (TAIL_SHAPE * xi).exp_m1() / TAIL_SHAPE
    } else {
        left * xi
    }
}

/// Standard deviation of `h_a(ξ)`.
pub fn shape_std(left: f64) -> f64 {
    let k = TAIL_SHAPE;
    let e1 = ((0.5 * k * k).exp() * PHI_K - 0.5) / k;
    let e2 = ((2.0 * k * k).exp() * PHI_2K - 2.0 * (0.5 * k * k).exp() * PHI_K + 0.5) / (k * k);
    let inv_sqrt_2pi = 0.398_942_280_401_432_7;
    let mean = e1 - left * inv_sqrt_2pi;
    (e2 + 0.5 * left * left - mean * mean).sqrt()
}

impl NoiseModel {
    pub const OFF: NoiseModel = NoiseModel {
        shift: 0.0,
        scale: 0.0,
        left: 1.0,
    };

    pub fn sample(&self, xi: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.shift + self.scale * shape_fn(self.left, xi) / shape_std(self.left)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Chooses the noise so that `base + noise` has the target sample mean and,
/// when `noise_std` is `None`, roughly the target std. The shape is then set
/// to bring the sample median as close to its target as the family allows.
///
/// `base` holds each flight's deterministic delay part and `xi` the standard
/// normal draw its noise will use.
pub fn calibrate_noise(base: &[f64], xi: &[f64], targets: &DelayTargets, noise_std: Option<f64>) -> Result<NoiseModel> {
    if base.len() != xi.len() {
        return Err(Error::Dimension {
            expected: base.len(),
            got: xi.len(),
        });
    }
    if base.is_empty() {
        return Ok(NoiseModel::OFF);
    }
    let m = mean(base);
    let var = base.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / base.len() as f64;
    let scale = match noise_std {
        Some(s) => s,
        None => {
            let left = targets.std * targets.std - var;
            if left < 0.0 {
                return Err(Error::Config(format!(
                    "congestion and propagation alone have std {:.1} min, above the {} min target",
                    var.sqrt(),
                    targets.std
                )));
            }
            left.sqrt()
        }
    };
    if scale == 0.0 {
        return Ok(NoiseModel::OFF);
    }
    let eval = |left: f64| -> (f64, f64) {
        let sd = shape_std(left);
        let mut total: Vec<f64> = base
            .iter()
            .zip(xi)
            .map(|(b, &x)| b + scale * shape_fn(left, x) / sd)
            .collect();
        let shift = targets.mean - mean(&total);
        (shift, median(&mut total) + shift - targets.median)
    };
    // Squeezing the left side pulls the median down relative to the mean.
    // When the target lies outside the reachable range the nearest end wins.
    let (mut lo, mut hi) = (MIN_LEFT, 1.0);
    if eval(lo).1 >= 0.0 {
        hi = lo;
    } else if eval(hi).1 <= 0.0 {
        lo = hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).1 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let left = 0.5 * (lo + hi);
    Ok(NoiseModel {
        shift: eval(left).0,
        scale,
        left,
    })
}
