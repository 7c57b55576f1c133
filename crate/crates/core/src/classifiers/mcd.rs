//! Monte Carlo dropout: dropout stays active at inference and each stochastic
//! forward pass is one posterior draw.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    network_class2, not_fitted, train_networks, Algorithm, CandidateSet, FitReport, NeuralConfig, Predictions,
    ProbabilisticClassifier,
};
use crate::error::{Error, Result};
use crate::nn::mlp::{coords_matrix, softmax_row};
use crate::nn::{CrossEntropy, DropoutMasks, NetworkWeights, Objective};
use crate::posterior::PredictiveEstimate;
use crate::rng::{derive_seed, stream};
use crate::synthdata::LabeledPoint;

/// Points per inference chunk; each chunk has its own random stream.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McdClassifier {
    pub neural: NeuralConfig,
    pub dropout_rate: f64,
    pub candidates: usize,
    /// Stochastic forward passes per prediction.
    pub passes: usize,
    pub fitted: Option<CandidateSet>,
    /// Root of the inference streams, fixed at fit time.
    pub inference_seed: u64,
}

impl McdClassifier {
    pub fn new(neural: NeuralConfig, dropout_rate: f64, candidates: usize, passes: usize) -> Self {
        Self {
            neural,
            dropout_rate,
            candidates,
            passes,
            fitted: None,
            inference_seed: 0,
        }
    }

    /// T class-2 probabilities per point, drawn with fresh masks per pass and point.
    pub fn pass_probabilities(&self, points: &[[f64; 2]]) -> Result<Vec<Vec<f64>>> {
        let set = self.fitted.as_ref().ok_or_else(not_fitted)?;
        mc_dropout_draws(
            &set.chosen.weights,
            &self.neural.mlp(self.dropout_rate),
            points,
            self.passes,
            self.inference_seed,
        )
    }
}

/// Per-point draws from `passes` dropout forward passes of one network.
pub fn mc_dropout_draws(
    weights: &NetworkWeights,
    mlp: &crate::nn::MlpConfig,
    points: &[[f64; 2]],
    passes: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if passes == 0 {
        return Err(Error::param("at least one forward pass is required"));
    }
    let chunks: Vec<Result<Vec<Vec<f64>>>> = points
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut rng = stream(seed, &format!("chunk/{c}"));
            let x = coords_matrix(chunk);
            let mut draws = vec![Vec::with_capacity(passes); chunk.len()];
            for _ in 0..passes {
                let masks = DropoutMasks::sample(&mut rng, chunk.len(), mlp);
                let (logits, _) = weights.forward_cached(x.view(), masks.as_ref())?;
                for (d, z) in draws.iter_mut().zip(logits.rows()) {
                    d.push(softmax_row([z[0], z[1]])[1]);
                }
            }
            Ok(draws)
        })
        .collect();
    let mut out = Vec::with_capacity(points.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

impl ProbabilisticClassifier for McdClassifier {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Mcd
    }

    fn fit(&mut self, train: &[LabeledPoint], validation: &[LabeledPoint], seed: u64) -> Result<FitReport> {
        if self.candidates == 0 || self.passes == 0 {
            return Err(Error::param("candidates and forward passes must be positive"));
        }
        let mlp = self.neural.mlp(self.dropout_rate);
        mlp.validate()?;
        let objective_for = |_: usize| -> Box<dyn Objective> { Box::new(CrossEntropy) };
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
        self.inference_seed = derive_seed(seed, "inference");
        Ok(report)
    }

    fn predict_detailed(&self, points: &[[f64; 2]]) -> Result<Predictions> {
        let estimates = self
            .pass_probabilities(points)?
            .iter()
            .map(|d| PredictiveEstimate::from_draws(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Predictions::without_flags(estimates))
    }

    fn network_probabilities(&self, points: &[[f64; 2]]) -> Option<Result<Vec<Vec<f64>>>> {
        let set = match self.fitted.as_ref() {
            Some(s) => s,
            None => return Some(Err(not_fitted())),
        };
        Some(
            set.networks()
                .into_iter()
                .map(|n| network_class2(&n.weights, &CrossEntropy, points))
                .collect(),
        )
    }
}
