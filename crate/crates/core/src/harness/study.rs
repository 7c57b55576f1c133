//! The study matrix: every dataset × algorithm × training size, fitted and
//! scored against the exact class probability.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Algorithm, FitReport, ProbabilisticClassifier};
use crate::error::{Error, Result};
use crate::harness::checkpoint::{CheckpointHeader, TrainedModel};
use crate::harness::config::{fingerprint, ExperimentConfig};
use crate::harness::profile::{lattice, ood_profile, radial_profile, spatial_rows};
use crate::harness::records::{
    write_csv, ExperimentRecord, ProfileRecord, ProfileRegion, RunStatus, SpatialRecord, PROFILE_HEADER,
    RECORD_HEADER, SPATIAL_HEADER,
};
use crate::metrics::{accuracy, EvaluationBatch, MetricSummary};
use crate::rng::derive_seed;
use crate::synthdata::{coords_of, lrfd, make_ood_grid, DatasetId, DatasetSplits};

/// Seed of the dataset splits for `id` under the study root seed.
pub fn dataset_seed(root: u64, id: DatasetId) -> u64 {
    derive_seed(root, &format!("data/{}", id.name()))
}

/// Fit seed of one study cell.
pub fn fit_seed(root: u64, id: DatasetId, algorithm: Algorithm, n_train: usize) -> u64 {
    derive_seed(root, &format!("fit/{}/{}/{n_train}", id.name(), algorithm.name()))
}

pub fn generate_splits(cfg: &ExperimentConfig, id: DatasetId) -> Result<DatasetSplits> {
    DatasetSplits::generate(id, dataset_seed(cfg.seed, id), cfg.splits.sizes())
}

/// Training points used for a cell, after the dataset-C cap.
pub fn fit_size(cfg: &ExperimentConfig, id: DatasetId, algorithm: Algorithm, n_train: usize) -> usize {
    if id == DatasetId::C && algorithm.is_nonparametric() {
        n_train.min(cfg.nonparametric_cap_c)
    } else {
        n_train
    }
}

/// Scores of one fitted classifier on a dataset's test set and OOD grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: MetricSummary,
    pub bayes_accuracy: f64,
    pub mean_uncertainty: f64,
    pub ood_mean_probability: f64,
    pub ood_min_probability: f64,
    pub ood_max_probability: f64,
    pub ood_angle_spread: f64,
    pub ood_mean_uncertainty: f64,
    pub ood_min_uncertainty: f64,
    pub ood_max_uncertainty: f64,
    pub ood_tail_flags: usize,
}

/// Full evaluation output, including the per-bin and per-point tables.
#[derive(Debug, Clone)]
pub struct EvaluationTables {
    pub summary: Evaluation,
    pub test_profile: Vec<crate::harness::profile::ProfileRow>,
    pub ood_profile: Vec<crate::harness::profile::ProfileRow>,
    pub spatial: Vec<crate::harness::profile::SpatialRow>,
}

/// Accuracy of the Bayes decision rule on `splits.test`.
pub fn bayes_accuracy(splits: &DatasetSplits) -> Result<f64> {
    let (batch, _) = test_batch(splits, None)?;
    Ok(accuracy(&batch))
}

fn test_batch(splits: &DatasetSplits, predicted: Option<Vec<f64>>) -> Result<(EvaluationBatch, Vec<f64>)> {
    let truth = splits
        .test
        .iter()
        .map(|p| lrfd(p.radius(), &splits.spec))
        .collect::<Result<Vec<f64>>>()?;
    let predicted = predicted.unwrap_or_else(|| truth.clone());
    let labels = splits.test.iter().map(|p| p.label).collect();
    Ok((EvaluationBatch::new(predicted, labels, truth.clone())?, truth))
}

pub fn evaluate(classifier: &dyn ProbabilisticClassifier, splits: &DatasetSplits, cfg: &ExperimentConfig) -> Result<EvaluationTables> {
    let test_points = coords_of(&splits.test);
    let test = classifier.predict(&test_points)?;
    let means: Vec<f64> = test.iter().map(|e| e.mean).collect();
    let (batch, _) = test_batch(splits, Some(means))?;
    let metrics = MetricSummary::compute(&batch);
    let bayes = bayes_accuracy(splits)?;
    let mean_uncertainty = test.iter().map(|e| e.uncertainty).sum::<f64>() / test.len() as f64;

    let grid = make_ood_grid();
    let ood = classifier.predict_detailed(&grid.coords())?;
    let ood_rows = ood_profile(&grid, &ood.estimates, &splits.spec)?;
    let n_ood = ood.estimates.len() as f64;
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&crate::PredictiveEstimate) -> f64| {
        ood.estimates.iter().map(g).fold(init, f)
    };
    let summary = Evaluation {
        metrics,
        bayes_accuracy: bayes,
        mean_uncertainty,
        ood_mean_probability: ood.estimates.iter().map(|e| e.mean).sum::<f64>() / n_ood,
        ood_min_probability: fold(f64::min, f64::INFINITY, |e| e.mean),
        ood_max_probability: fold(f64::max, f64::NEG_INFINITY, |e| e.mean),
        ood_angle_spread: ood_rows
            .iter()
            .map(|r| r.max_estimate - r.min_estimate)
            .fold(0.0, f64::max),
        ood_mean_uncertainty: ood.estimates.iter().map(|e| e.uncertainty).sum::<f64>() / n_ood,
        ood_min_uncertainty: fold(f64::min, f64::INFINITY, |e| e.uncertainty),
        ood_max_uncertainty: fold(f64::max, f64::NEG_INFINITY, |e| e.uncertainty),
        ood_tail_flags: ood.tail_flags.iter().filter(|&&f| f).count(),
    };

    let test_profile = radial_profile(&test_points, &test, &splits.spec, cfg.profile_bins, cfg.profile_max_radius)?;
    let spatial = if cfg.spatial_lattice > 0 {
        let pts = lattice(cfg.spatial_lattice, cfg.spatial_extent);
        let est = classifier.predict(&pts)?;
        spatial_rows(&pts, &est, &splits.spec)?
    } else {
        Vec::new()
    };
    Ok(EvaluationTables {
        summary,
        test_profile,
        ood_profile: ood_rows,
        spatial,
    })
}

/// Everything a study run produces.
#[derive(Debug, Clone, Default)]
pub struct StudyOutput {
    pub records: Vec<ExperimentRecord>,
    pub profiles: Vec<ProfileRecord>,
    pub spatial: Vec<SpatialRecord>,
}

impl StudyOutput {
    fn extend(&mut self, other: StudyOutput) {
        self.records.extend(other.records);
        self.profiles.extend(other.profiles);
        self.spatial.extend(other.spatial);
    }

    pub fn record(&self, id: DatasetId, algorithm: Algorithm, n_train: usize) -> Option<&ExperimentRecord> {
        self.records
            .iter()
            .find(|r| r.dataset == id && r.algorithm == algorithm && r.n_train == n_train)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn make_record(
    hyper: &serde_json::Value,
    splits: &DatasetSplits,
    algorithm: Algorithm,
    n_train: usize,
    n_fit: usize,
    seed: u64,
    status: RunStatus,
    report: &FitReport,
    eval: Option<&Evaluation>,
    wall_time_s: f64,
) -> Result<ExperimentRecord> {
    let missing = Evaluation {
        metrics: MetricSummary::missing(),
        bayes_accuracy: bayes_accuracy(splits)?,
        mean_uncertainty: f64::NAN,
        ood_mean_probability: f64::NAN,
        ood_min_probability: f64::NAN,
        ood_max_probability: f64::NAN,
        ood_angle_spread: f64::NAN,
        ood_mean_uncertainty: f64::NAN,
        ood_min_uncertainty: f64::NAN,
        ood_max_uncertainty: f64::NAN,
        ood_tail_flags: 0,
    };
    let e = eval.unwrap_or(&missing);
    Ok(ExperimentRecord {
        dataset: splits.id,
        algorithm,
        n_train,
        n_fit,
        seed,
        fingerprint: fingerprint(hyper),
        dataset_fingerprint: splits.manifest().fingerprint,
        status,
        accuracy: e.metrics.accuracy,
        bayes_accuracy: e.bayes_accuracy,
        z: e.metrics.z,
        ece: e.metrics.ece,
        log_loss: e.metrics.log_loss,
        wasserstein1: e.metrics.wasserstein1,
        mean_kl: e.metrics.mean_kl,
        mean_uncertainty: e.mean_uncertainty,
        ood_mean_probability: e.ood_mean_probability,
        ood_min_probability: e.ood_min_probability,
        ood_max_probability: e.ood_max_probability,
        ood_angle_spread: e.ood_angle_spread,
        ood_mean_uncertainty: e.ood_mean_uncertainty,
        ood_min_uncertainty: e.ood_min_uncertainty,
        ood_max_uncertainty: e.ood_max_uncertainty,
        ood_tail_flags: e.ood_tail_flags,
        units_trained: report.units_trained,
        units_diverged: report.units_diverged,
        validation_loss: report.validation_loss,
        hyperparameters: hyper.to_string(),
        wall_time_s,
    })
}

/// Record for a checkpoint evaluated on `splits`.
pub fn checkpoint_record(header: &CheckpointHeader, splits: &DatasetSplits, eval: &Evaluation) -> Result<ExperimentRecord> {
    let status = if header.n_fit < header.n_train {
        RunStatus::Capped
    } else {
        RunStatus::Ok
    };
    make_record(
        &header.hyperparameters,
        splits,
        header.algorithm,
        header.n_train,
        header.n_fit,
        header.seed,
        status,
        &header.fit_report,
        Some(eval),
        header.wall_time_s,
    )
}

/// Fits and scores one cell. Divergence becomes a record, not an error.
pub fn run_cell(cfg: &ExperimentConfig, splits: &DatasetSplits, algorithm: Algorithm, n_train: usize) -> Result<StudyOutput> {
    if n_train == 0 || n_train > splits.train.len() {
        return Err(Error::InsufficientData {
            requested: n_train,
            available: splits.train.len(),
        });
    }
    let n_fit = fit_size(cfg, splits.id, algorithm, n_train);
    let seed = fit_seed(cfg.seed, splits.id, algorithm, n_train);
    let mut model = TrainedModel::build(algorithm, cfg);
    let started = Instant::now();
    let fitted = model
        .classifier_mut()
        .fit(&splits.train[..n_fit], &splits.validation, seed);
    let mut out = StudyOutput::default();
    match fitted {
        Ok(report) => {
            let tables = evaluate(model.classifier(), splits, cfg)?;
            let wall = started.elapsed().as_secs_f64();
            let status = if n_fit < n_train { RunStatus::Capped } else { RunStatus::Ok };
            out.records.push(make_record(
                &cfg.algorithm_hyperparameters(algorithm),
                splits,
                algorithm,
                n_train,
                n_fit,
                seed,
                status,
                &report,
                Some(&tables.summary),
                wall,
            )?);
            let id = splits.id;
            out.profiles.extend(
                tables
                    .test_profile
                    .iter()
                    .map(|r| ProfileRecord::new(id, algorithm, n_train, ProfileRegion::Test, r))
                    .chain(
                        tables
                            .ood_profile
                            .iter()
                            .map(|r| ProfileRecord::new(id, algorithm, n_train, ProfileRegion::Ood, r)),
                    ),
            );
            out.spatial
                .extend(tables.spatial.iter().map(|r| SpatialRecord::new(id, algorithm, n_train, r)));
        }
        Err(Error::Diverged(msg)) => {
            log::warn!("{} {algorithm} N={n_train} diverged: {msg}", splits.id.name());
            let report = FitReport {
                notes: vec![msg],
                ..FitReport::default()
            };
            let wall = started.elapsed().as_secs_f64();
            out.records.push(make_record(
                &cfg.algorithm_hyperparameters(algorithm),
                splits,
                algorithm,
                n_train,
                n_fit,
                seed,
                RunStatus::Diverged,
                &report,
                None,
                wall,
            )?);
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Runs the whole matrix in a fixed order.
pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyOutput> {
    cfg.validate()?;
    let mut out = StudyOutput::default();
    for &id in &cfg.datasets {
        let splits = generate_splits(cfg, id)?;
        for &algorithm in &cfg.algorithms {
            for &n in &cfg.train_sizes {
                log::info!("{} {algorithm} N={n}", id.name());
                out.extend(run_cell(cfg, &splits, algorithm, n)?);
            }
        }
    }
    Ok(out)
}

/// Writes `records.csv`, `profiles.csv`, `spatial.csv`, the resolved
/// configuration, and the dataset directories under `dir`.
pub fn write_study(dir: &Path, cfg: &ExperimentConfig, out: &StudyOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("records.csv"), &out.records, RECORD_HEADER)?;
    write_csv(&dir.join("profiles.csv"), &out.profiles, PROFILE_HEADER)?;
    write_csv(&dir.join("spatial.csv"), &out.spatial, SPATIAL_HEADER)?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
    for &id in &cfg.datasets {
        generate_splits(cfg, id)?.write_dir(&dir.join("data").join(id.name()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetworkSize;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.datasets = vec![DatasetId::C];
        cfg.algorithms = vec![Algorithm::Nne, Algorithm::Dpmm];
        cfg.train_sizes = vec![60, 90];
        cfg.splits.train = 90;
        cfg.splits.validation = 50;
        cfg.splits.test = 80;
        cfg.nonparametric_cap_c = 70;
        cfg.spatial_lattice = 3;
        cfg.neural.size = NetworkSize::Small;
        cfg.neural.max_epochs = 3;
        cfg.ensemble.members = 2;
        cfg.dpmm.chains = 1;
        cfg.dpmm.burn_in = 3;
        cfg.dpmm.samples = 3;
        cfg
    }

    #[test]
    fn matrix_is_complete_and_capped() {
        let cfg = tiny();
        let out = run_study(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        let capped = out.record(DatasetId::C, Algorithm::Dpmm, 90).unwrap();
        assert_eq!(capped.status, RunStatus::Capped);
        assert_eq!(capped.n_fit, 70);
        assert_eq!(out.record(DatasetId::C, Algorithm::Nne, 90).unwrap().n_fit, 90);
        assert_eq!(out.record(DatasetId::C, Algorithm::Dpmm, 60).unwrap().status, RunStatus::Ok);
        assert_eq!(out.spatial.len(), 4 * 9);
        let per_cell = cfg.profile_bins + crate::synthdata::OOD_RADII;
        assert_eq!(out.profiles.len(), 4 * per_cell);
    }

    #[test]
    fn reruns_are_identical_apart_from_wall_time() {
        let mut cfg = tiny();
        cfg.algorithms = vec![Algorithm::Nne];
        cfg.train_sizes = vec![60];
        let strip = |o: StudyOutput| {
            o.records
                .into_iter()
                .map(|mut r| {
                    r.wall_time_s = 0.0;
                    r
                })
                .collect::<Vec<_>>()
        };
        let a = strip(run_study(&cfg).unwrap());
        let b = strip(run_study(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn bayes_rule_scores_its_own_accuracy() {
        let cfg = tiny();
        let splits = generate_splits(&cfg, DatasetId::C).unwrap();
        // identical class distributions: lrfd is 1/2 everywhere, ties go to class 1
        let acc = bayes_accuracy(&splits).unwrap();
        let ones = splits.test.iter().filter(|p| !p.label.is_two()).count();
        assert_eq!(acc, ones as f64 / splits.test.len() as f64);
    }
}
