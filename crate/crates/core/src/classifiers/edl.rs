//! Evidential deep learning: a single network whose softplus outputs are the
//! evidence of a Dirichlet over the class probabilities.

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    network_class2, network_logits, not_fitted, train_networks, Algorithm, CandidateSet, FitReport,
    NeuralConfig, Predictions, ProbabilisticClassifier,
};
use crate::error::{Error, Result};
use crate::nn::{DirichletOutput, Evidential, Objective};
use crate::posterior::PredictiveEstimate;
use crate::synthdata::LabeledPoint;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdlClassifier {
    pub neural: NeuralConfig,
    /// Final weight λ₀ of the annealed KL regularizer.
    pub lambda0: f64,
    /// Independently initialized networks trained; the one with the lowest
    /// validation cross-entropy is kept.
    pub candidates: usize,
    pub fitted: Option<CandidateSet>,
}

impl EdlClassifier {
    pub fn new(neural: NeuralConfig, lambda0: f64, candidates: usize) -> Self {
        Self {
            neural,
            lambda0,
            candidates,
            fitted: None,
        }
    }

    fn objective(&self) -> Evidential {
        Evidential { lambda0: self.lambda0 }
    }

    /// Dirichlet outputs of the selected network.
    pub fn dirichlet(&self, points: &[[f64; 2]]) -> Result<Vec<DirichletOutput>> {
        let set = self.fitted.as_ref().ok_or_else(not_fitted)?;
        let logits = network_logits(&set.chosen.weights, points)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|z| DirichletOutput::from_logits([z[0], z[1]]))
            .collect())
    }
}

/// Mean and standard deviation of the class-2 Dirichlet marginal.
pub fn edl_estimate(d: &DirichletOutput) -> PredictiveEstimate {
    PredictiveEstimate {
        mean: d.mean_class2(),
        uncertainty: d.variance_class2().sqrt(),
    }
}

impl ProbabilisticClassifier for EdlClassifier {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Edl
    }

    fn fit(&mut self, train: &[LabeledPoint], validation: &[LabeledPoint], seed: u64) -> Result<FitReport> {
        if self.candidates == 0 {
            return Err(Error::param("at least one candidate network is required"));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::param(format!("annealing weight {} must be non-negative", self.lambda0)));
        }
        let mlp = self.neural.mlp(0.0);
        let objective = self.objective();
        let objective_for = move |_: usize| -> Box<dyn Objective> { Box::new(objective) };
        let trained = train_networks(
            &self.neural,
            &mlp,
            &objective_for,
            train,
            validation,
            seed,
            "candidate",
            self.candidates,
        )?;
        let set = CandidateSet::select(trained)?;
        let report = set.report();
        self.fitted = Some(set);
        Ok(report)
    }

    fn predict_detailed(&self, points: &[[f64; 2]]) -> Result<Predictions> {
        let estimates = self.dirichlet(points)?.iter().map(edl_estimate).collect();
        Ok(Predictions::without_flags(estimates))
    }

    fn network_probabilities(&self, points: &[[f64; 2]]) -> Option<Result<Vec<Vec<f64>>>> {
        let set = match self.fitted.as_ref() {
            Some(s) => s,
            None => return Some(Err(not_fitted())),
        };
        let objective = self.objective();
        Some(
            set.networks()
                .into_iter()
                .map(|n| network_class2(&n.weights, &objective, points))
                .collect(),
        )
    }
}
