//! Probabilistic classifiers behind one interface.
//!
//! Every classifier returns a [`PredictiveEstimate`] of the class-2 probability
//! per query point. Neural classifiers live in the submodules here; the
//! Gaussian process and the Dirichlet-process mixture live in [`crate::gp`]
//! and [`crate::dpmm`].

pub mod edl;
pub mod ensemble;
pub mod mcd;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::mlp::coords_matrix;
use crate::nn::{train, MlpConfig, NetworkSize, NetworkWeights, Objective, TrainConfig};
use crate::posterior::PredictiveEstimate;
use crate::rng::{derive_seed, stream};
use crate::synthdata::LabeledPoint;

pub use edl::EdlClassifier;
pub use ensemble::EnsembleClassifier;
pub use mcd::McdClassifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "NNE")]
    Nne,
    #[serde(rename = "CL")]
    Cl,
    #[serde(rename = "EDL")]
    Edl,
    #[serde(rename = "MCD")]
    Mcd,
    #[serde(rename = "GP")]
    Gp,
    #[serde(rename = "DPMM")]
    Dpmm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Nne,
        Algorithm::Cl,
        Algorithm::Edl,
        Algorithm::Mcd,
        Algorithm::Gp,
        Algorithm::Dpmm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nne => "NNE",
            Algorithm::Cl => "CL",
            Algorithm::Edl => "EDL",
            Algorithm::Mcd => "MCD",
            Algorithm::Gp => "GP",
            Algorithm::Dpmm => "DPMM",
        }
    }

    pub fn is_neural(self) -> bool {
        !matches!(self, Algorithm::Gp | Algorithm::Dpmm)
    }

    pub fn is_nonparametric(self) -> bool {
        !self.is_neural()
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Malformed(format!("unknown algorithm '{s}'")))
    }
}

/// Estimates plus a per-point flag marking numerical tail fallbacks.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub estimates: Vec<PredictiveEstimate>,
    pub tail_flags: Vec<bool>,
}

impl Predictions {
    pub fn without_flags(estimates: Vec<PredictiveEstimate>) -> Self {
        let n = estimates.len();
        Self {
            estimates,
            tail_flags: vec![false; n],
        }
    }

    pub fn means(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.mean).collect()
    }

    pub fn uncertainties(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.uncertainty).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Networks, candidates, or chains that finished.
    pub units_trained: usize,
    pub units_diverged: usize,
    /// Best validation loss where the algorithm computes one.
    pub validation_loss: Option<f64>,
    pub notes: Vec<String>,
}

pub trait ProbabilisticClassifier: Send + Sync {
    fn algorithm(&self) -> Algorithm;

    fn fit(&mut self, train: &[LabeledPoint], validation: &[LabeledPoint], seed: u64) -> Result<FitReport>;

    fn predict_detailed(&self, points: &[[f64; 2]]) -> Result<Predictions>;

    fn predict(&self, points: &[[f64; 2]]) -> Result<Vec<PredictiveEstimate>> {
        Ok(self.predict_detailed(points)?.estimates)
    }

    /// Deterministic class-2 probabilities of each constituent network
    /// (ensemble members or selection candidates), one row per network.
    fn network_probabilities(&self, _points: &[[f64; 2]]) -> Option<Result<Vec<Vec<f64>>>> {
        None
    }
}

pub(crate) fn not_fitted() -> Error {
    Error::param("classifier has not been fitted")
}

/// Optimization settings shared by the neural classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuralConfig {
    pub size: NetworkSize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Overrides the batch schedule when set.
    pub batch_size: Option<usize>,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        Self {
            size: NetworkSize::Medium,
            learning_rate: 1e-3,
            weight_decay: 0.01,
            max_epochs: 200,
            patience: 20,
            batch_size: None,
        }
    }
}

impl NeuralConfig {
    pub fn mlp(&self, dropout_rate: f64) -> MlpConfig {
        self.size.config(dropout_rate)
    }

    pub fn train_config(&self, n_train: usize) -> TrainConfig {
        let mut cfg = TrainConfig::for_train_size(n_train);
        cfg.learning_rate = self.learning_rate;
        cfg.weight_decay = self.weight_decay;
        cfg.max_epochs = self.max_epochs;
        cfg.patience = self.patience;
        if let Some(b) = self.batch_size {
            cfg.batch_size = b;
        }
        cfg
    }
}

/// A trained network with its selection loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedNetwork {
    pub weights: NetworkWeights,
    pub validation_loss: f64,
    pub best_epoch: usize,
}

/// Trains `count` independently initialized networks in parallel.
///
/// Unit `i` draws its initialization and its shuffle/dropout stream from
/// `derive_seed(seed, "{label}/{i}")`, so a unit's result depends only on
/// the fit seed and its index. Diverged units come back as `None`.
pub(crate) fn train_networks(
    neural: &NeuralConfig,
    mlp: &MlpConfig,
    objective_for: &(dyn Fn(usize) -> Box<dyn Objective> + Sync),
    train_set: &[LabeledPoint],
    validation: &[LabeledPoint],
    seed: u64,
    label: &str,
    count: usize,
) -> Result<Vec<Option<TrainedNetwork>>> {
    let cfg = neural.train_config(train_set.len());
    (0..count)
        .into_par_iter()
        .map(|i| {
            let unit_seed = derive_seed(seed, &format!("{label}/{i}"));
            let init = NetworkWeights::init(mlp, &mut stream(unit_seed, "init"));
            let objective = objective_for(i);
            match train(
                init,
                mlp,
                train_set,
                &cfg,
                objective.as_ref(),
                validation,
                derive_seed(unit_seed, "train"),
            ) {
                Ok(out) => Ok(Some(TrainedNetwork {
                    weights: out.weights,
                    validation_loss: out.best_validation_loss,
                    best_epoch: out.best_epoch,
                })),
                Err(Error::Diverged(msg)) => {
                    log::warn!("{label} {i} diverged: {msg}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Logits of a network for a list of points, without dropout.
pub(crate) fn network_logits(weights: &NetworkWeights, points: &[[f64; 2]]) -> Result<Array2<f64>> {
    weights.logits(coords_matrix(points).view())
}

/// Class-2 probability of each point under a network and objective.
pub(crate) fn network_class2(weights: &NetworkWeights, objective: &dyn Objective, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let logits = network_logits(weights, points)?;
    Ok(logits
        .rows()
        .into_iter()
        .map(|z| objective.class2_probability([z[0], z[1]]))
        .collect())
}

/// Index of the lowest validation loss among the surviving candidates.
pub(crate) fn best_candidate(candidates: &[Option<TrainedNetwork>]) -> Option<usize> {
    candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.as_ref().map(|c| (i, c.validation_loss)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Candidates trained for single-network algorithms, with the selected one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateSet {
    pub chosen_index: usize,
    pub chosen: TrainedNetwork,
    /// Validation loss per candidate; `None` marks a diverged candidate.
    pub candidate_losses: Vec<Option<f64>>,
    /// All surviving candidates; kept in memory for grid statistics only.
    #[serde(skip)]
    pub candidates: Vec<TrainedNetwork>,
}

impl CandidateSet {
    pub(crate) fn select(trained: Vec<Option<TrainedNetwork>>) -> Result<Self> {
        let chosen_index = best_candidate(&trained)
            .ok_or_else(|| Error::Diverged(format!("all {} candidates diverged", trained.len())))?;
        let candidate_losses = trained.iter().map(|t| t.as_ref().map(|t| t.validation_loss)).collect();
        let chosen = trained[chosen_index].clone().expect("selected candidate survived");
        Ok(Self {
            chosen_index,
            chosen,
            candidate_losses,
            candidates: trained.into_iter().flatten().collect(),
        })
    }

    pub(crate) fn report(&self) -> FitReport {
        let diverged = self.candidate_losses.iter().filter(|l| l.is_none()).count();
        FitReport {
            units_trained: self.candidate_losses.len() - diverged,
            units_diverged: diverged,
            validation_loss: Some(self.chosen.validation_loss),
            notes: vec![format!("kept candidate {}", self.chosen_index)],
        }
    }

    /// Surviving candidate networks, or the chosen one after a checkpoint reload.
    pub fn networks(&self) -> Vec<&TrainedNetwork> {
        if self.candidates.is_empty() {
            vec![&self.chosen]
        } else {
            self.candidates.iter().collect()
        }
    }
}
