//! Trained models and their on-disk checkpoints.
//!
//! A checkpoint is a directory holding `model.json` (header plus the
//! serialized classifier). A GP checkpoint adds `cholesky.bin`, the n×n lower
//! Cholesky factor as little-endian f64 in column-major order, so that
//! reloading skips the O(n³) factorization.

use std::fs;
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    Algorithm, EdlClassifier, EnsembleClassifier, FitReport, McdClassifier, ProbabilisticClassifier,
};
use crate::dpmm::DpmmClassifier;
use crate::error::{Error, Result};
use crate::gp::{GpClassifier, GpConfig, HyperparameterSearch, LaplaceFit, LaplaceRecord};
use crate::harness::config::{fingerprint, ExperimentConfig};
use crate::synthdata::DatasetId;

pub const MODEL_FILE: &str = "model.json";
pub const CHOLESKY_FILE: &str = "cholesky.bin";
pub const FORMAT_VERSION: u32 = 1;

/// A classifier of any of the six kinds.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Ensemble(EnsembleClassifier),
    Edl(EdlClassifier),
    Mcd(McdClassifier),
    Gp(GpClassifier),
    Dpmm(DpmmClassifier),
}

impl TrainedModel {
    /// Unfitted classifier with the hyperparameters from `cfg`.
    pub fn build(algorithm: Algorithm, cfg: &ExperimentConfig) -> Self {
        match algorithm {
            Algorithm::Nne => Self::Ensemble(EnsembleClassifier::nne(cfg.neural, cfg.ensemble.members)),
            Algorithm::Cl => Self::Ensemble(EnsembleClassifier::conflictual(
                cfg.neural,
                cfg.ensemble.members,
                cfg.ensemble.beta,
            )),
            Algorithm::Edl => Self::Edl(EdlClassifier::new(cfg.neural, cfg.edl.lambda0, cfg.edl.candidates)),
            Algorithm::Mcd => Self::Mcd(McdClassifier::new(
                cfg.neural,
                cfg.mcd.dropout,
                cfg.mcd.candidates,
                cfg.mcd.passes,
            )),
            Algorithm::Gp => Self::Gp(GpClassifier::new(cfg.gp.to_config())),
            Algorithm::Dpmm => Self::Dpmm(DpmmClassifier::new(cfg.dpmm.to_config())),
        }
    }

    pub fn classifier(&self) -> &dyn ProbabilisticClassifier {
        match self {
            Self::Ensemble(c) => c,
            Self::Edl(c) => c,
            Self::Mcd(c) => c,
            Self::Gp(c) => c,
            Self::Dpmm(c) => c,
        }
    }

    pub fn classifier_mut(&mut self) -> &mut dyn ProbabilisticClassifier {
        match self {
            Self::Ensemble(c) => c,
            Self::Edl(c) => c,
            Self::Mcd(c) => c,
            Self::Gp(c) => c,
            Self::Dpmm(c) => c,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.classifier().algorithm()
    }
}

/// Provenance stored next to the model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub dataset: DatasetId,
    pub dataset_fingerprint: String,
    pub n_train: usize,
    /// Points actually fitted (smaller than `n_train` when capped).
    pub n_fit: usize,
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    /// Fingerprint of `hyperparameters`.
    pub fingerprint: String,
    pub fit_report: FitReport,
    pub wall_time_s: f64,
}

impl CheckpointHeader {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        algorithm: Algorithm,
        cfg: &ExperimentConfig,
        dataset: DatasetId,
        dataset_fingerprint: String,
        n_train: usize,
        n_fit: usize,
        seed: u64,
        fit_report: FitReport,
        wall_time_s: f64,
    ) -> Self {
        let hyperparameters = cfg.algorithm_hyperparameters(algorithm);
        Self {
            format_version: FORMAT_VERSION,
            algorithm,
            dataset,
            dataset_fingerprint,
            n_train,
            n_fit,
            seed,
            fingerprint: fingerprint(&hyperparameters),
            hyperparameters,
            fit_report,
            wall_time_s,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GpPayload {
    config: GpConfig,
    search: Option<HyperparameterSearch>,
    inference_seed: u64,
    fit: LaplaceRecord,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    header: CheckpointHeader,
    payload: serde_json::Value,
}

/// Writes `model` (which must be fitted) to `dir`.
pub fn save_checkpoint(dir: &Path, header: &CheckpointHeader, model: &TrainedModel) -> Result<()> {
    if header.algorithm != model.algorithm() {
        return Err(Error::param(format!(
            "header says {} but the model is {}",
            header.algorithm,
            model.algorithm()
        )));
    }
    fs::create_dir_all(dir)?;
    let payload = match model {
        TrainedModel::Ensemble(c) => serde_json::to_value(c)?,
        TrainedModel::Edl(c) => serde_json::to_value(c)?,
        TrainedModel::Mcd(c) => serde_json::to_value(c)?,
        TrainedModel::Dpmm(c) => serde_json::to_value(c)?,
        TrainedModel::Gp(c) => {
            let fit = c.fitted.as_ref().ok_or_else(|| Error::param("GP has not been fitted"))?;
            write_cholesky(&dir.join(CHOLESKY_FILE), &fit.chol)?;
            serde_json::to_value(GpPayload {
                config: c.config,
                search: c.search.clone(),
                inference_seed: c.inference_seed,
                fit: fit.record(),
            })?
        }
    };
    let file = ModelFile {
        header: header.clone(),
        payload,
    };
    fs::write(dir.join(MODEL_FILE), serde_json::to_string(&file)?)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<(CheckpointHeader, TrainedModel)> {
    let path = dir.join(MODEL_FILE);
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    let malformed = |e: serde_json::Error| Error::Malformed(format!("{}: {e}", path.display()));
    let file: ModelFile = serde_json::from_str(&fs::read_to_string(&path)?).map_err(malformed)?;
    let header = file.header;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Malformed(format!(
            "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    let recomputed = fingerprint(&header.hyperparameters);
    if recomputed != header.fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: header.fingerprint,
            found: recomputed,
        });
    }
    let p = file.payload;
    let model = match header.algorithm {
        Algorithm::Nne | Algorithm::Cl => {
            let c: EnsembleClassifier = serde_json::from_value(p).map_err(malformed)?;
            if c.beta.is_some() != (header.algorithm == Algorithm::Cl) {
                return Err(Error::Malformed("ensemble kind disagrees with header".into()));
            }
            TrainedModel::Ensemble(c)
        }
        Algorithm::Edl => TrainedModel::Edl(serde_json::from_value(p).map_err(malformed)?),
        Algorithm::Mcd => TrainedModel::Mcd(serde_json::from_value(p).map_err(malformed)?),
        Algorithm::Dpmm => TrainedModel::Dpmm(serde_json::from_value(p).map_err(malformed)?),
        Algorithm::Gp => {
            let g: GpPayload = serde_json::from_value(p).map_err(malformed)?;
            let n = g.fit.inputs.len();
            let chol = read_cholesky(&dir.join(CHOLESKY_FILE), n)?;
            TrainedModel::Gp(GpClassifier {
                config: g.config,
                fitted: Some(LaplaceFit::from_parts(g.fit, chol)?),
                search: g.search,
                inference_seed: g.inference_seed,
            })
        }
    };
    Ok((header, model))
}

pub fn write_cholesky(path: &Path, l: &Mat<f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(l.nrows() * l.ncols() * 8);
    for j in 0..l.ncols() {
        for i in 0..l.nrows() {
            bytes.extend_from_slice(&l[(i, j)].to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_cholesky(path: &Path, n: usize) -> Result<Mat<f64>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    if bytes.len() != n * n * 8 {
        return Err(Error::Malformed(format!(
            "{} holds {} bytes, expected {} for a {n}x{n} factor",
            path.display(),
            bytes.len(),
            n * n * 8
        )));
    }
    let value = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    Ok(Mat::from_fn(n, n, |i, j| value(j * n + i)))
}
