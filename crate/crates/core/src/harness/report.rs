//! Collects study and grid outputs into one figure-ready bundle.
//!
//! Each input directory may hold any of `records.csv`, `profiles.csv`,
//! `spatial.csv` and `grid.csv` plus `data/<dataset>/manifest.json`. The
//! bundle contains `metrics.csv`, `ood.csv`, `profiles.csv`, `spatial.csv`,
//! `grid.csv`, the dataset manifests under `manifests/`, and `bundle.json`
//! listing where every table came from.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::Algorithm;
use crate::error::{Error, Result};
use crate::harness::grid::{GridRecord, GRID_HEADER};
use crate::harness::records::{
    read_csv, write_csv, ExperimentRecord, ProfileRecord, RunStatus, SpatialRecord, PROFILE_HEADER, SPATIAL_HEADER,
};
use crate::synthdata::{DatasetId, DatasetManifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub dataset: DatasetId,
    pub algorithm: Algorithm,
    pub n_train: usize,
    pub status: RunStatus,
    pub accuracy: f64,
    pub bayes_accuracy: f64,
    pub z: f64,
    pub ece: f64,
    pub log_loss: f64,
    pub wasserstein1: f64,
    pub mean_kl: f64,
    pub mean_uncertainty: f64,
}

const METRICS_HEADER: &[&str] = &[
    "dataset",
    "algorithm",
    "n_train",
    "status",
    "accuracy",
    "bayes_accuracy",
    "z",
    "ece",
    "log_loss",
    "wasserstein1",
    "mean_kl",
    "mean_uncertainty",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodRow {
    pub dataset: DatasetId,
    pub algorithm: Algorithm,
    pub n_train: usize,
    pub status: RunStatus,
    pub ood_mean_probability: f64,
    pub ood_min_probability: f64,
    pub ood_max_probability: f64,
    pub ood_angle_spread: f64,
    pub ood_mean_uncertainty: f64,
    pub ood_min_uncertainty: f64,
    pub ood_max_uncertainty: f64,
    pub ood_tail_flags: usize,
}

const OOD_HEADER: &[&str] = &[
    "dataset",
    "algorithm",
    "n_train",
    "status",
    "ood_mean_probability",
    "ood_min_probability",
    "ood_max_probability",
    "ood_angle_spread",
    "ood_mean_uncertainty",
    "ood_min_uncertainty",
    "ood_max_uncertainty",
    "ood_tail_flags",
];

impl From<&ExperimentRecord> for MetricsRow {
    fn from(r: &ExperimentRecord) -> Self {
        Self {
            dataset: r.dataset,
            algorithm: r.algorithm,
            n_train: r.n_train,
            status: r.status,
            accuracy: r.accuracy,
            bayes_accuracy: r.bayes_accuracy,
            z: r.z,
            ece: r.ece,
            log_loss: r.log_loss,
            wasserstein1: r.wasserstein1,
            mean_kl: r.mean_kl,
            mean_uncertainty: r.mean_uncertainty,
        }
    }
}

impl From<&ExperimentRecord> for OodRow {
    fn from(r: &ExperimentRecord) -> Self {
        Self {
            dataset: r.dataset,
            algorithm: r.algorithm,
            n_train: r.n_train,
            status: r.status,
            ood_mean_probability: r.ood_mean_probability,
            ood_min_probability: r.ood_min_probability,
            ood_max_probability: r.ood_max_probability,
            ood_angle_spread: r.ood_angle_spread,
            ood_mean_uncertainty: r.ood_mean_uncertainty,
            ood_min_uncertainty: r.ood_min_uncertainty,
            ood_max_uncertainty: r.ood_max_uncertainty,
            ood_tail_flags: r.ood_tail_flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub inputs: Vec<PathBuf>,
    pub records: usize,
    pub profile_rows: usize,
    pub spatial_rows: usize,
    pub grid_rows: usize,
    pub datasets: Vec<String>,
}

fn algorithm_rank(a: Algorithm) -> usize {
    Algorithm::ALL.iter().position(|&b| b == a).expect("listed")
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if path.exists() {
        read_csv(path)
    } else {
        Ok(Vec::new())
    }
}

/// Merges the inputs into a bundle under `out`. At least one input must
/// contain a `records.csv` or a `grid.csv`.
pub fn build_report(inputs: &[PathBuf], out: &Path) -> Result<BundleManifest> {
    let mut records: Vec<ExperimentRecord> = Vec::new();
    let mut profiles: Vec<ProfileRecord> = Vec::new();
    let mut spatial: Vec<SpatialRecord> = Vec::new();
    let mut grid: Vec<GridRecord> = Vec::new();
    let mut manifests: BTreeMap<String, DatasetManifest> = BTreeMap::new();
    for dir in inputs {
        if !dir.is_dir() {
            return Err(Error::MissingFile(dir.clone()));
        }
        let (has_records, has_grid) = (dir.join("records.csv").exists(), dir.join("grid.csv").exists());
        if !has_records && !has_grid {
            return Err(Error::MissingFile(dir.join("records.csv")));
        }
        records.extend(read_optional::<ExperimentRecord>(&dir.join("records.csv"))?);
        profiles.extend(read_optional::<ProfileRecord>(&dir.join("profiles.csv"))?);
        spatial.extend(read_optional::<SpatialRecord>(&dir.join("spatial.csv"))?);
        grid.extend(read_optional::<GridRecord>(&dir.join("grid.csv"))?);
        let data = dir.join("data");
        if data.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(&data)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
            entries.sort();
            for e in entries {
                let m = e.join("manifest.json");
                if m.exists() {
                    let manifest = DatasetManifest::read(&m)?;
                    if let Some(prev) = manifests.get(&manifest.fingerprint) {
                        debug_assert_eq!(prev, &manifest);
                    }
                    manifests.insert(manifest.fingerprint.clone(), manifest);
                }
            }
        }
    }
    records.sort_by_key(|r| (r.dataset.name(), algorithm_rank(r.algorithm), r.n_train));
    profiles.sort_by(|a, b| {
        (a.dataset.name(), algorithm_rank(a.algorithm), a.n_train, a.region as u8)
            .cmp(&(b.dataset.name(), algorithm_rank(b.algorithm), b.n_train, b.region as u8))
            .then(a.r_lo.total_cmp(&b.r_lo))
    });

    fs::create_dir_all(out)?;
    let metrics: Vec<MetricsRow> = records.iter().map(MetricsRow::from).collect();
    let ood: Vec<OodRow> = records.iter().map(OodRow::from).collect();
    write_csv(&out.join("metrics.csv"), &metrics, METRICS_HEADER)?;
    write_csv(&out.join("ood.csv"), &ood, OOD_HEADER)?;
    write_csv(&out.join("profiles.csv"), &profiles, PROFILE_HEADER)?;
    write_csv(&out.join("spatial.csv"), &spatial, SPATIAL_HEADER)?;
    write_csv(&out.join("grid.csv"), &grid, GRID_HEADER)?;
    let mdir = out.join("manifests");
    fs::create_dir_all(&mdir)?;
    let mut datasets = Vec::new();
    for m in manifests.values() {
        let name = format!("{}-{}.json", m.dataset.name(), m.fingerprint);
        fs::write(mdir.join(&name), serde_json::to_string_pretty(m)?)?;
        datasets.push(name);
    }
    let bundle = BundleManifest {
        inputs: inputs.to_vec(),
        records: records.len(),
        profile_rows: profiles.len(),
        spatial_rows: spatial.len(),
        grid_rows: grid.len(),
        datasets,
    };
    fs::write(out.join("bundle.json"), serde_json::to_string_pretty(&bundle)?)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::harness::study::{run_study, write_study};
    use crate::nn::NetworkSize;

    #[test]
    fn bundle_from_a_tiny_study() {
        let mut cfg = ExperimentConfig::default();
        cfg.datasets = vec![DatasetId::B];
        cfg.algorithms = vec![Algorithm::Dpmm, Algorithm::Nne];
        cfg.train_sizes = vec![40];
        cfg.splits.train = 40;
        cfg.splits.validation = 30;
        cfg.splits.test = 30;
        cfg.spatial_lattice = 2;
        cfg.neural.size = NetworkSize::Small;
        cfg.neural.max_epochs = 2;
        cfg.ensemble.members = 2;
        cfg.dpmm.chains = 1;
        cfg.dpmm.burn_in = 2;
        cfg.dpmm.samples = 2;
        let out = run_study(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let study = dir.path().join("study");
        write_study(&study, &cfg, &out).unwrap();
        let bundle_dir = dir.path().join("bundle");
        let b = build_report(&[study], &bundle_dir).unwrap();
        assert_eq!(b.records, 2);
        assert_eq!(b.datasets.len(), 1);
        let metrics: Vec<MetricsRow> = read_csv(&bundle_dir.join("metrics.csv")).unwrap();
        // sorted by the canonical algorithm order
        assert_eq!(metrics[0].algorithm, Algorithm::Nne);
        assert_eq!(metrics[1].algorithm, Algorithm::Dpmm);
        for f in ["ood.csv", "profiles.csv", "spatial.csv", "grid.csv", "bundle.json"] {
            assert!(bundle_dir.join(f).exists(), "{f}");
        }
        assert!(matches!(
            build_report(&[dir.path().join("nope")], &bundle_dir),
            Err(Error::MissingFile(_))
        ));
    }
}
