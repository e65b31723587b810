//! Versioned JSON model files. Large weight vectors are stored as base64 of
//! little-endian `f64` bytes, which round-trips bit-exactly.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{GbdtModel, LinearModel, MlpModel, TrainConfig, TrajCnnModel};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub fn encode_f64s(v: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(v.len() * 8);
    for x in v {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_f64s(s: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(s)
        .map_err(|e| Error::Encoding(format!("bad base64 weights: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Encoding(format!("weight blob of {} bytes is not a whole number of f64", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// `#[serde(with = ...)]` adapter for `Vec<f64>` fields.
pub mod f64_base64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::encode_f64s(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let s = String::deserialize(d)?;
        super::decode_f64s(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Lr(LinearModel),
    Mlp(MlpModel),
    Gbdt(GbdtModel),
    #[serde(rename = "trajcnn")]
    TrajCnn(TrajCnnModel),
}

/// On-disk model: format version, the config it was trained with, the
/// feature columns it expects and the fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub config: TrainConfig,
    pub feature_names: Vec<String>,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(config: TrainConfig, feature_names: Vec<String>, model: TrainedModel) -> ModelFile {
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            config,
            feature_names,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.version != MODEL_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                f.version
            )));
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        ModelFile::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn base64_round_trip_is_bit_exact(v in prop::collection::vec(prop::num::f64::ANY, 0..50)) {
            let back = decode_f64s(&encode_f64s(&v)).unwrap();
            prop_assert_eq!(back.len(), v.len());
            for (a, b) in back.iter().zip(&v) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_blobs_and_versions() {
        assert!(matches!(decode_f64s("AAAA"), Err(Error::Encoding(_))));
        assert!(matches!(decode_f64s("!!"), Err(Error::Encoding(_))));
        let f = ModelFile::new(
            TrainConfig::default(),
            vec!["a".into()],
            TrainedModel::Lr(LinearModel {
                weights: vec![0.5],
                intercept: 1.0,
            }),
        );
        let text = f.to_json().unwrap();
        assert_eq!(ModelFile::from_json(&text).unwrap(), f);
        let bumped = text.replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(ModelFile::from_json(&bumped), Err(Error::Schema(_))));
    }
}
