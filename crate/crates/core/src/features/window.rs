use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::FlightRecord;
use crate::{Error, Result};

/// Default distance between the prediction moment and scheduled gate-out.
pub const DEFAULT_GAP_MIN: i64 = 240;

/// Prediction moment plus the observation window before it and the
/// prediction gap after it. The gap ends at the flight's scheduled gate-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub prediction_time: DateTime<Utc>,
    pub observation_min: i64,
    pub gap_min: i64,
}

impl TimeWindow {
    pub fn new(prediction_time: DateTime<Utc>, observation_min: i64, gap_min: i64) -> Result<Self> {
        if observation_min <= 0 {
            return Err(Error::Parameter(format!(
                "observation length must be positive, got {observation_min} min"
            )));
        }
        if gap_min < 0 {
            return Err(Error::Parameter(format!("gap must be nonnegative, got {gap_min} min")));
        }
        Ok(TimeWindow {
            prediction_time,
            observation_min,
            gap_min,
        })
    }

    pub fn observation_start(&self) -> DateTime<Utc> {
        self.prediction_time - Duration::minutes(self.observation_min)
    }

    /// End of the gap interval, equal to the scheduled gate-out.
    pub fn gap_end(&self) -> DateTime<Utc> {
        self.prediction_time + Duration::minutes(self.gap_min)
    }

    /// `[prediction_time − observation, prediction_time)`
    pub fn in_observation(&self, t: DateTime<Utc>) -> bool {
        t >= self.observation_start() && t < self.prediction_time
    }

    /// `[prediction_time, prediction_time + gap)`
    pub fn in_gap(&self, t: DateTime<Utc>) -> bool {
        t >= self.prediction_time && t < self.gap_end()
    }
}

/// Window for predicting `flight`'s departure delay `gap_min` minutes ahead
/// of its scheduled gate-out.
pub fn select_window(flight: &FlightRecord, observation_min: i64, gap_min: i64) -> Result<TimeWindow> {
    if gap_min < 0 {
        return Err(Error::Parameter(format!("gap must be nonnegative, got {gap_min} min")));
    }
    TimeWindow::new(flight.sched_dep - Duration::minutes(gap_min), observation_min, gap_min)
}
