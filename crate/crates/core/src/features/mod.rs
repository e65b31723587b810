//! Per-flight feature vectors: schedule reference attributes, tarmac traffic
//! counts over the observation window, and encoded weather.

mod assemble;
mod atc;
mod dataset;
mod pca;
mod vector;
mod weather;
mod window;

pub use assemble::{build_dataset, column_specs, departures, Assembled, FeatureConfig, WeatherEncoder};
pub use atc::{extract_atc, takeoff_time, AtcConfig, AtcFeatures, TrafficIndex};
pub use dataset::{ColumnSpec, Dataset, DatasetSchema, FeatureGroup};
pub use pca::{apply_pca, covariance, fit_pca, symmetric_eigen, PcaModel, DEFAULT_COMPONENTS};
pub use vector::{
    build_feature_vector, minute_of_day, reference_features, weekday_index, FeatureVector, WeatherFeatures,
    MISSING_INBOUND, REFERENCE_NAMES,
};
pub use weather::{encode_weather, weather_column_names, wind_to_radians, ConditionVocab, WEATHER_NUMERIC};
pub use window::{select_window, TimeWindow, DEFAULT_GAP_MIN};
