//! Evaluation: annotation stripping into ground truth, and scoring.

mod score;
mod strip;

use std::path::Path;

pub use score::{
    base_match, exact_match, score, task_of, Fraction, PredictedType, PredictionEntry, ScoreReport, TaskScore,
    DEFAULT_KS, TASKS,
};
pub use strip::{is_excluded_truth, strip_project, strip_source, GroundTruthEntry, StripReport};

use crate::error::{io_err, Error, Result};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn load_truth(path: &Path) -> Result<Vec<GroundTruthEntry>> {
    read_json(path)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionEntry>> {
    read_json(path)
}
