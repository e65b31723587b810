//! Flight departure-delay prediction from airport surface movement data.
//!
//! The crate covers the whole pipeline: parsing and cleaning GPS surface
//! tracks ([`ingest`]), tarmac zone classification ([`zones`]), per-flight
//! feature extraction ([`features`]) and trajectory rasters ([`raster`]),
//! from-scratch regressors ([`learn`]), the temporal evaluation protocol
//! ([`eval`]) and a synthetic airport scenario generator ([`synth`]) that
//! stands in for real surveillance data.

pub mod error;
pub mod eval;
pub mod features;
pub mod geo;
pub mod ingest;
pub mod learn;
pub mod prepare;
pub mod raster;
pub mod synth;
pub mod zones;

pub use error::{Error, Result};
