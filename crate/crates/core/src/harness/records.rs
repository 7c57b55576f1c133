//! Flat CSV rows written by the harness.
//!
//! Every table carries the dataset, algorithm and training size as its first
//! columns so tables from different runs can be concatenated. Missing values
//! are written as `NaN`; `wall_time_s` is always the last column of a record
//! so that rows can be compared byte for byte once it is cut off.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classifiers::Algorithm;
use crate::error::{Error, Result};
use crate::harness::profile::{ProfileRow, SpatialRow};
use crate::synthdata::DatasetId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    /// Fitted on fewer points than requested (nonparametric runs on dataset C).
    Capped,
    /// Every training unit diverged; metrics are missing.
    Diverged,
}

/// One (dataset, algorithm, training size) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub dataset: DatasetId,
    pub algorithm: Algorithm,
    pub n_train: usize,
    /// Points actually used for fitting.
    pub n_fit: usize,
    pub seed: u64,
    /// Hash of the algorithm hyperparameters.
    pub fingerprint: String,
    pub dataset_fingerprint: String,
    pub status: RunStatus,
    pub accuracy: f64,
    /// Accuracy of the Bayes rule on the same test set.
    pub bayes_accuracy: f64,
    pub z: f64,
    pub ece: f64,
    pub log_loss: f64,
    pub wasserstein1: f64,
    pub mean_kl: f64,
    pub mean_uncertainty: f64,
    pub ood_mean_probability: f64,
    pub ood_min_probability: f64,
    pub ood_max_probability: f64,
    /// Largest spread of the estimate across polar angles at one radius.
    pub ood_angle_spread: f64,
    pub ood_mean_uncertainty: f64,
    pub ood_min_uncertainty: f64,
    pub ood_max_uncertainty: f64,
    /// OOD points whose estimate needed the numerical tail fallback.
    pub ood_tail_flags: usize,
    pub units_trained: usize,
    pub units_diverged: usize,
    pub validation_loss: Option<f64>,
    pub hyperparameters: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileRegion {
    /// Test-set points binned by radius.
    Test,
    /// OOD grid, one row per radius.
    Ood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub dataset: DatasetId,
    pub algorithm: Algorithm,
    pub n_train: usize,
    pub region: ProfileRegion,
    pub r_lo: f64,
    pub r_hi: f64,
    pub r_center: f64,
    pub count: usize,
    pub mean_estimate: f64,
    pub min_estimate: f64,
    pub max_estimate: f64,
    pub mean_uncertainty: f64,
    pub lrfd_center: f64,
}

impl ProfileRecord {
    pub fn new(dataset: DatasetId, algorithm: Algorithm, n_train: usize, region: ProfileRegion, row: &ProfileRow) -> Self {
        Self {
            dataset,
            algorithm,
            n_train,
            region,
            r_lo: row.r_lo,
            r_hi: row.r_hi,
            r_center: row.r_center,
            count: row.count,
            mean_estimate: row.mean_estimate,
            min_estimate: row.min_estimate,
            max_estimate: row.max_estimate,
            mean_uncertainty: row.mean_uncertainty,
            lrfd_center: row.lrfd_center,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialRecord {
    pub dataset: DatasetId,
    pub algorithm: Algorithm,
    pub n_train: usize,
    pub x1: f64,
    pub x2: f64,
    pub mean: f64,
    pub uncertainty: f64,
    pub lrfd: f64,
}

impl SpatialRecord {
    pub fn new(dataset: DatasetId, algorithm: Algorithm, n_train: usize, row: &SpatialRow) -> Self {
        Self {
            dataset,
            algorithm,
            n_train,
            x1: row.x1,
            x2: row.x2,
            mean: row.mean,
            uncertainty: row.uncertainty,
            lrfd: row.lrfd,
        }
    }
}

/// Writes rows with a header line; an empty table still gets its header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    if rows.is_empty() {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        w.flush()?;
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

pub const RECORD_HEADER: &[&str] = &[
    "dataset",
    "algorithm",
    "n_train",
    "n_fit",
    "seed",
    "fingerprint",
    "dataset_fingerprint",
    "status",
    "accuracy",
    "bayes_accuracy",
    "z",
    "ece",
    "log_loss",
    "wasserstein1",
    "mean_kl",
    "mean_uncertainty",
    "ood_mean_probability",
    "ood_min_probability",
    "ood_max_probability",
    "ood_angle_spread",
    "ood_mean_uncertainty",
    "ood_min_uncertainty",
    "ood_max_uncertainty",
    "ood_tail_flags",
    "units_trained",
    "units_diverged",
    "validation_loss",
    "hyperparameters",
    "wall_time_s",
];

pub const PROFILE_HEADER: &[&str] = &[
    "dataset",
    "algorithm",
    "n_train",
    "region",
    "r_lo",
    "r_hi",
    "r_center",
    "count",
    "mean_estimate",
    "min_estimate",
    "max_estimate",
    "mean_uncertainty",
    "lrfd_center",
];

pub const SPATIAL_HEADER: &[&str] = &["dataset", "algorithm", "n_train", "x1", "x2", "mean", "uncertainty", "lrfd"];

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_record() -> ExperimentRecord {
        ExperimentRecord {
            dataset: DatasetId::B,
            algorithm: Algorithm::Cl,
            n_train: 250,
            n_fit: 250,
            seed: 7,
            fingerprint: "00ff".into(),
            dataset_fingerprint: "abcd".into(),
            status: RunStatus::Ok,
            accuracy: 0.7,
            bayes_accuracy: 0.73,
            z: 1.0,
            ece: 0.01,
            log_loss: 0.5,
            wasserstein1: 0.02,
            mean_kl: 0.003,
            mean_uncertainty: 0.05,
            ood_mean_probability: 0.9,
            ood_min_probability: 0.8,
            ood_max_probability: 1.0,
            ood_angle_spread: 0.1,
            ood_mean_uncertainty: 0.01,
            ood_min_uncertainty: 0.0,
            ood_max_uncertainty: 0.02,
            ood_tail_flags: 0,
            units_trained: 10,
            units_diverged: 0,
            validation_loss: None,
            hyperparameters: "{\"beta\":0.1}".into(),
            wall_time_s: 1.5,
        }
    }

    #[test]
    fn header_matches_field_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_csv(&p, &[sample_record()], RECORD_HEADER).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), RECORD_HEADER.join(","));
        assert!(text.lines().next().unwrap().ends_with(",wall_time_s"));
    }

    #[test]
    fn records_round_trip_with_missing_values() {
        let mut r = sample_record();
        r.status = RunStatus::Diverged;
        r.accuracy = f64::NAN;
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_csv(&p, &[r.clone(), sample_record()], RECORD_HEADER).unwrap();
        let back: Vec<ExperimentRecord> = read_csv(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back[0].accuracy.is_nan());
        assert_eq!(back[0].status, RunStatus::Diverged);
        assert_eq!(back[1], sample_record());
    }

    #[test]
    fn empty_tables_keep_their_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_csv::<SpatialRecord>(&p, &[], SPATIAL_HEADER).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap().trim(), SPATIAL_HEADER.join(","));
        assert!(read_csv::<SpatialRecord>(&p).unwrap().is_empty());
        assert!(matches!(read_csv::<SpatialRecord>(&dir.path().join("x.csv")), Err(Error::MissingFile(_))));
    }
}
