//! File formats and pipeline configuration.

mod config;
mod keypoints;
mod tables;

pub use config::PipelineConfig;
pub use keypoints::{load_keypoints, write_keypoints, DROP_JOINT};
pub use tables::{
    read_annotations, read_features, read_scores, read_segment_predictions, read_verdicts, write_annotations,
    write_behaviors, write_features, write_scores, write_segment_predictions, write_verdicts,
};

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Rounds to 4 decimal places for reporting.
pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}
