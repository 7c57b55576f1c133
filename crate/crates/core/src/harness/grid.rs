//! Hyperparameter grid for the neural classifiers.
//!
//! NNE varies network size × learning rate × weight decay × training size.
//! CL, EDL and MCD fix the learning rate and instead vary their own parameter
//! (β, λ₀, dropout rate) × network size × weight decay × training size.
//! With the default three values per axis every algorithm gets 81 cells.
//! Each cell is scored on the validation split; spreads are 2.5/97.5
//! nearest-rank percentiles over the constituent networks (accuracy, W1, OOD
//! probability) or over the OOD points (uncertainty).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Algorithm, NeuralConfig, ProbabilisticClassifier};
use crate::error::{Error, Result};
use crate::harness::checkpoint::TrainedModel;
use crate::harness::config::{fingerprint, ExperimentConfig};
use crate::harness::records::RunStatus;
use crate::metrics::{accuracy, wasserstein1_samples, EvaluationBatch};
use crate::nn::NetworkSize;
use crate::rng::derive_seed;
use crate::synthdata::{coords_of, lrfd, make_ood_grid, DatasetSplits, LabeledPoint};

/// Nearest-rank percentile of already sorted values: the value at rank
/// ⌈p/100 · n⌉ (1-based), clamped to [1, n].
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn percentiles(values: &[f64]) -> (f64, f64) {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    (nearest_rank(&v, 2.5), nearest_rank(&v, 97.5))
}

/// The algorithm-specific axis of a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridAxis {
    /// NNE varies the learning rate instead.
    None,
    Beta,
    Lambda0,
    Dropout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub algorithm: Algorithm,
    pub n_train: usize,
    pub size: NetworkSize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub axis: GridAxis,
    pub axis_value: f64,
}

impl GridCell {
    /// Experiment configuration reproducing this cell.
    pub fn config(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = base.clone();
        cfg.neural = NeuralConfig {
            size: self.size,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..base.neural
        };
        cfg.ensemble.members = base.grid.members;
        cfg.edl.candidates = base.grid.candidates;
        cfg.mcd.candidates = base.grid.candidates;
        match self.axis {
            GridAxis::None => {}
            GridAxis::Beta => cfg.ensemble.beta = self.axis_value,
            GridAxis::Lambda0 => cfg.edl.lambda0 = self.axis_value,
            GridAxis::Dropout => cfg.mcd.dropout = self.axis_value,
        }
        cfg
    }

    fn label(&self) -> String {
        format!(
            "grid/{}/{}/{}/{:e}/{:e}/{:e}",
            self.algorithm,
            self.n_train,
            self.size.name(),
            self.learning_rate,
            self.weight_decay,
            self.axis_value
        )
    }
}

/// All cells for one neural algorithm.
pub fn grid_cells(algorithm: Algorithm, cfg: &ExperimentConfig) -> Result<Vec<GridCell>> {
    let g = &cfg.grid;
    let (axis, values): (GridAxis, Vec<f64>) = match algorithm {
        Algorithm::Nne => (GridAxis::None, g.learning_rates.clone()),
        Algorithm::Cl => (GridAxis::Beta, g.betas.clone()),
        Algorithm::Edl => (GridAxis::Lambda0, g.lambda0s.clone()),
        Algorithm::Mcd => (GridAxis::Dropout, g.dropouts.clone()),
        other => return Err(Error::param(format!("{other} has no hyperparameter grid"))),
    };
    let mut cells = Vec::new();
    for &n_train in &g.train_sizes {
        for &size in &g.sizes {
            for &v in &values {
                for &wd in &g.weight_decays {
                    let (learning_rate, axis_value) = match axis {
                        GridAxis::None => (v, f64::NAN),
                        _ => (cfg.neural.learning_rate, v),
                    };
                    cells.push(GridCell {
                        algorithm,
                        n_train,
                        size,
                        learning_rate,
                        weight_decay: wd,
                        axis,
                        axis_value,
                    });
                }
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub dataset: crate::synthdata::DatasetId,
    pub algorithm: Algorithm,
    pub n_train: usize,
    pub size: NetworkSize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub axis: GridAxis,
    pub axis_value: f64,
    pub seed: u64,
    pub fingerprint: String,
    pub status: RunStatus,
    /// Surviving networks behind the percentile columns.
    pub networks: usize,
    pub val_accuracy: f64,
    pub val_accuracy_p2_5: f64,
    pub val_accuracy_p97_5: f64,
    pub val_wasserstein1: f64,
    pub val_wasserstein1_p2_5: f64,
    pub val_wasserstein1_p97_5: f64,
    pub ood_mean_probability: f64,
    pub ood_probability_p2_5: f64,
    pub ood_probability_p97_5: f64,
    pub ood_mean_uncertainty: f64,
    pub ood_uncertainty_p2_5: f64,
    pub ood_uncertainty_p97_5: f64,
    /// Validation accuracy below the configured threshold.
    pub poorly_fitted: bool,
    pub wall_time_s: f64,
}

pub const GRID_HEADER: &[&str] = &[
    "dataset",
    "algorithm",
    "n_train",
    "size",
    "learning_rate",
    "weight_decay",
    "axis",
    "axis_value",
    "seed",
    "fingerprint",
    "status",
    "networks",
    "val_accuracy",
    "val_accuracy_p2_5",
    "val_accuracy_p97_5",
    "val_wasserstein1",
    "val_wasserstein1_p2_5",
    "val_wasserstein1_p97_5",
    "ood_mean_probability",
    "ood_probability_p2_5",
    "ood_probability_p97_5",
    "ood_mean_uncertainty",
    "ood_uncertainty_p2_5",
    "ood_uncertainty_p97_5",
    "poorly_fitted",
    "wall_time_s",
];

fn validation_scores(points: &[LabeledPoint], predicted: Vec<f64>, truth: &[f64]) -> Result<(f64, f64)> {
    let labels = points.iter().map(|p| p.label).collect();
    let batch = EvaluationBatch::new(predicted, labels, truth.to_vec())?;
    Ok((accuracy(&batch), wasserstein1_samples(batch.predicted(), truth)?))
}

/// Fits and scores one cell on `splits`.
pub fn run_grid_cell(base: &ExperimentConfig, splits: &DatasetSplits, cell: &GridCell) -> Result<GridRecord> {
    if cell.n_train == 0 || cell.n_train > splits.train.len() {
        return Err(Error::InsufficientData {
            requested: cell.n_train,
            available: splits.train.len(),
        });
    }
    let cfg = cell.config(base);
    let seed = derive_seed(base.seed, &format!("{}/{}", splits.id.name(), cell.label()));
    let hyper = serde_json::json!({
        "cell": cell,
        "hyperparameters": cfg.algorithm_hyperparameters(cell.algorithm),
    });
    let mut record = GridRecord {
        dataset: splits.id,
        algorithm: cell.algorithm,
        n_train: cell.n_train,
        size: cell.size,
        learning_rate: cell.learning_rate,
        weight_decay: cell.weight_decay,
        axis: cell.axis,
        axis_value: cell.axis_value,
        seed,
        fingerprint: fingerprint(&hyper),
        status: RunStatus::Ok,
        networks: 0,
        val_accuracy: f64::NAN,
        val_accuracy_p2_5: f64::NAN,
        val_accuracy_p97_5: f64::NAN,
        val_wasserstein1: f64::NAN,
        val_wasserstein1_p2_5: f64::NAN,
        val_wasserstein1_p97_5: f64::NAN,
        ood_mean_probability: f64::NAN,
        ood_probability_p2_5: f64::NAN,
        ood_probability_p97_5: f64::NAN,
        ood_mean_uncertainty: f64::NAN,
        ood_uncertainty_p2_5: f64::NAN,
        ood_uncertainty_p97_5: f64::NAN,
        poorly_fitted: true,
        wall_time_s: 0.0,
    };
    let started = Instant::now();
    let mut model = TrainedModel::build(cell.algorithm, &cfg);
    match model
        .classifier_mut()
        .fit(&splits.train[..cell.n_train], &splits.validation, seed)
    {
        Ok(_) => {}
        Err(Error::Diverged(msg)) => {
            log::warn!("grid cell {} diverged: {msg}", cell.label());
            record.status = RunStatus::Diverged;
            record.wall_time_s = started.elapsed().as_secs_f64();
            return Ok(record);
        }
        Err(e) => return Err(e),
    }
    let clf: &dyn ProbabilisticClassifier = model.classifier();
    let val_points = coords_of(&splits.validation);
    let truth = splits
        .validation
        .iter()
        .map(|p| lrfd(p.radius(), &splits.spec))
        .collect::<Result<Vec<f64>>>()?;
    let combined: Vec<f64> = clf.predict(&val_points)?.iter().map(|e| e.mean).collect();
    let (acc, w1) = validation_scores(&splits.validation, combined, &truth)?;
    record.val_accuracy = acc;
    record.val_wasserstein1 = w1;
    record.poorly_fitted = acc < base.grid.poor_fit_accuracy;

    let grid = make_ood_grid();
    let ood_points = grid.coords();
    let ood = clf.predict(&ood_points)?;
    record.ood_mean_probability = ood.iter().map(|e| e.mean).sum::<f64>() / ood.len() as f64;
    record.ood_mean_uncertainty = ood.iter().map(|e| e.uncertainty).sum::<f64>() / ood.len() as f64;
    let unc: Vec<f64> = ood.iter().map(|e| e.uncertainty).collect();
    (record.ood_uncertainty_p2_5, record.ood_uncertainty_p97_5) = percentiles(&unc);

    let per_network_val = clf.network_probabilities(&val_points).ok_or_else(|| {
        Error::param(format!("{} exposes no constituent networks", cell.algorithm))
    })??;
    let per_network_ood = clf.network_probabilities(&ood_points).expect("checked above")?;
    record.networks = per_network_val.len();
    let mut accs = Vec::new();
    let mut w1s = Vec::new();
    for p in per_network_val {
        let (a, w) = validation_scores(&splits.validation, p, &truth)?;
        accs.push(a);
        w1s.push(w);
    }
    let ood_means: Vec<f64> = per_network_ood
        .iter()
        .map(|p| p.iter().sum::<f64>() / p.len() as f64)
        .collect();
    (record.val_accuracy_p2_5, record.val_accuracy_p97_5) = percentiles(&accs);
    (record.val_wasserstein1_p2_5, record.val_wasserstein1_p97_5) = percentiles(&w1s);
    (record.ood_probability_p2_5, record.ood_probability_p97_5) = percentiles(&ood_means);
    record.wall_time_s = started.elapsed().as_secs_f64();
    Ok(record)
}

/// Runs every cell of `algorithm` on `splits`, in cell order.
pub fn run_grid(base: &ExperimentConfig, splits: &DatasetSplits, algorithm: Algorithm) -> Result<Vec<GridRecord>> {
    let cells = grid_cells(algorithm, base)?;
    let total = cells.len();
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            log::info!("grid {algorithm} cell {}/{total}", i + 1);
            run_grid_cell(base, splits, c)
        })
        .collect()
}
