//! From raw schedule, GPS and weather inputs to a model-ready evaluation set.

use crate::eval::EvalSet;
use crate::features::{build_dataset, Assembled, FeatureConfig, TrafficIndex};
use crate::ingest::{reconstruct_trajectories, CleaningConfig, CleaningReport, FlightRecord, GpsPoint, Trajectory, WeatherRecord};
use crate::raster::{window_images, TrajImage};
use crate::synth::Scenario;
use crate::zones::ZoneMap;
use crate::Result;

/// Everything derived from one set of inputs for a fixed window and gap.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub assembled: Assembled,
    /// Unscaled image of each dataset row, in row order.
    pub images: Vec<TrajImage>,
    pub cleaning: CleaningReport,
}

impl Prepared {
    pub fn eval_set(&self) -> Result<EvalSet> {
        EvalSet::new(self.assembled.dataset.clone()).with_images(self.images.clone())
    }
}

/// Cleaned and segmented tracks plus the traffic index built over them.
#[derive(Debug, Clone)]
pub struct Traffic {
    pub trajectories: Vec<Trajectory>,
    pub index: TrafficIndex,
    pub cleaning: CleaningReport,
}

impl Traffic {
    pub fn build(
        gps: Vec<GpsPoint>,
        schedule: &[FlightRecord],
        map: &ZoneMap,
        cleaning: &CleaningConfig,
        features: &FeatureConfig,
    ) -> Result<Traffic> {
        let (trajectories, report) = reconstruct_trajectories(gps, &map.bbox, cleaning)?;
        Ok(Traffic::from_trajectories(trajectories, report, schedule, map, features))
    }

    /// Indexes tracks that were already cleaned and segmented.
    pub fn from_trajectories(
        trajectories: Vec<Trajectory>,
        cleaning: CleaningReport,
        schedule: &[FlightRecord],
        map: &ZoneMap,
        features: &FeatureConfig,
    ) -> Traffic {
        let index = TrafficIndex::new(&trajectories, schedule, &features.airport, map, &features.atc);
        Traffic {
            trajectories,
            index,
            cleaning,
        }
    }

    /// Features and images for one observation length and gap.
    pub fn prepare(
        &self,
        schedule: &[FlightRecord],
        weather: &[WeatherRecord],
        map: &ZoneMap,
        features: &FeatureConfig,
    ) -> Result<Prepared> {
        let assembled = build_dataset(schedule, &self.index, weather, features)?;
        let images = window_images(&self.index, &assembled.windows, &assembled.dataset.flight_ids, &map.bbox)?;
        Ok(Prepared {
            assembled,
            images,
            cleaning: self.cleaning.clone(),
        })
    }
}

/// Runs cleaning, feature extraction and rasterization on a generated
/// scenario.
pub fn prepare_scenario(
    scenario: &Scenario,
    map: &ZoneMap,
    cleaning: &CleaningConfig,
    features: &FeatureConfig,
) -> Result<Prepared> {
    Traffic::build(scenario.gps.clone(), &scenario.schedule, map, cleaning, features)?.prepare(
        &scenario.schedule,
        &scenario.weather,
        map,
        features,
    )
}
