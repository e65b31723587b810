//! Per-flight feature extraction over a whole schedule.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_feature_vector, encode_weather, fit_pca, select_window, weather_column_names, AtcConfig, AtcFeatures,
    ColumnSpec, ConditionVocab, Dataset, FeatureGroup, PcaModel, TimeWindow, TrafficIndex, WeatherFeatures,
    DEFAULT_COMPONENTS, DEFAULT_GAP_MIN, MISSING_INBOUND, REFERENCE_NAMES,
};
use crate::ingest::{latest_at_or_before, match_arrival_leg, FlightRecord, LabelVector, WeatherRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// IATA code of the airport whose departures are predicted.
    pub airport: String,
    pub observation_min: i64,
    pub gap_min: i64,
    pub atc: AtcConfig,
    pub pca_components: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            airport: "LAX".into(),
            observation_min: 60,
            gap_min: DEFAULT_GAP_MIN,
            atc: AtcConfig::default(),
            pca_components: DEFAULT_COMPONENTS,
        }
    }
}

/// Fitted weather encoding shared by every flight of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherEncoder {
    pub vocab: ConditionVocab,
    pub pca: PcaModel,
    encoded: Vec<Vec<f64>>,
}

impl WeatherEncoder {
    /// Fits the condition vocabulary and PCA on the given observations.
    ///
    /// Both are unsupervised, so fitting them on the full series leaks no
    /// delay information.
    pub fn fit(records: &[WeatherRecord], k: usize) -> Result<WeatherEncoder> {
        let vocab = ConditionVocab::fit(records);
        let encoded = records
            .iter()
            .map(|r| encode_weather(r, &vocab))
            .collect::<Result<Vec<_>>>()?;
        let d = 8 + vocab.len();
        let flat: Vec<f64> = encoded.iter().flatten().copied().collect();
        let x = Array2::from_shape_vec((encoded.len(), d), flat).map_err(|e| Error::Fit(e.to_string()))?;
        let pca = fit_pca(&x, k)?;
        Ok(WeatherEncoder { vocab, pca, encoded })
    }

    /// Features from the latest observation at or before `t`, falling back
    /// to the earliest observation when `t` precedes the series.
    pub fn features_at(&self, records: &[WeatherRecord], t: chrono::DateTime<chrono::Utc>) -> Result<WeatherFeatures> {
        let i = latest_at_or_before(records, t).unwrap_or(0);
        let raw = self.encoded[i].clone();
        let pca = self.pca.transform(ndarray::ArrayView1::from(&raw))?;
        Ok(WeatherFeatures { raw, pca })
    }
}

/// Dataset plus the fitted state that produced it.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub dataset: Dataset,
    /// Prediction window of each dataset row.
    pub windows: Vec<TimeWindow>,
    pub weather: WeatherEncoder,
}

/// Departures from `airport`, sorted by scheduled gate-out then id.
pub fn departures<'a>(schedule: &'a [FlightRecord], airport: &str) -> Vec<&'a FlightRecord> {
    let mut d: Vec<&FlightRecord> = schedule.iter().filter(|f| f.origin == airport).collect();
    d.sort_by(|a, b| a.sched_dep.cmp(&b.sched_dep).then_with(|| a.flight_id.cmp(&b.flight_id)));
    d
}

pub fn column_specs(vocab: &ConditionVocab, pca_dim: usize) -> Vec<ColumnSpec> {
    let spec = |name: String, group| ColumnSpec { name, group };
    let mut cols: Vec<ColumnSpec> = REFERENCE_NAMES
        .iter()
        .map(|n| spec(n.to_string(), FeatureGroup::Reference))
        .collect();
    cols.push(spec(MISSING_INBOUND.into(), FeatureGroup::Reference));
    cols.extend(AtcFeatures::NAMES.iter().map(|n| spec(n.to_string(), FeatureGroup::Atc)));
    cols.extend(
        weather_column_names(vocab)
            .into_iter()
            .map(|n| spec(format!("weather_{n}"), FeatureGroup::WeatherRaw)),
    );
    cols.extend((0..pca_dim).map(|i| spec(format!("weather_pc{:02}", i + 1), FeatureGroup::WeatherPca)));
    cols
}

/// Builds one row per departure from `config.airport`.
///
/// `weather` must be sorted by time and nonempty.
pub fn build_dataset(
    schedule: &[FlightRecord],
    index: &TrafficIndex,
    weather: &[WeatherRecord],
    config: &FeatureConfig,
) -> Result<Assembled> {
    if weather.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 weather records, got {}", weather.len())));
    }
    let encoder = WeatherEncoder::fit(weather, config.pca_components)?;
    let deps = departures(schedule, &config.airport);
    let arrivals: Vec<FlightRecord> = schedule
        .iter()
        .filter(|f| f.destination == config.airport)
        .cloned()
        .collect();
    let owned: Vec<FlightRecord> = deps.iter().map(|f| (*f).clone()).collect();
    let inbound = match_arrival_leg(&owned, &arrivals);

    let rows: Vec<(TimeWindow, Vec<f64>)> = owned
        .par_iter()
        .zip(inbound.par_iter())
        .map(|(f, inb)| {
            let w = select_window(f, config.observation_min, config.gap_min)?;
            let atc = index.atc(&w);
            let wf = encoder.features_at(weather, w.prediction_time)?;
            let mut v = build_feature_vector(f, inb.map(|i| &arrivals[i]), atc, &wf, false).to_vec();
            v.extend_from_slice(&wf.pca);
            Ok((w, v))
        })
        .collect::<Result<_>>()?;

    let columns = column_specs(&encoder.vocab, encoder.pca.output_dim());
    let n = rows.len();
    let d = columns.len();
    let mut x = Array2::zeros((n, d));
    let mut y = Array2::zeros((n, LabelVector::NAMES.len()));
    let mut windows = Vec::with_capacity(n);
    for (i, (w, v)) in rows.into_iter().enumerate() {
        if v.len() != d {
            return Err(Error::Dimension { expected: d, got: v.len() });
        }
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&v));
        y.row_mut(i)
            .assign(&ndarray::ArrayView1::from(&owned[i].departure_label().as_array()));
        windows.push(w);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite feature value".into()));
    }
    Ok(Assembled {
        dataset: Dataset {
            flight_ids: owned.iter().map(|f| f.flight_id.clone()).collect(),
            timestamps: owned.iter().map(|f| f.sched_dep).collect(),
            columns,
            x,
            y,
        },
        windows,
        weather: encoder,
    })
}
