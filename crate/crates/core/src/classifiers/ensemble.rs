//! Neural-network ensembles, optionally trained with the conflictual loss.
//!
//! With the conflictual loss the first half of the members is pulled toward
//! class 1 and the second half toward class 2. Each member contributes one
//! posterior draw of the class-2 probability.

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    network_class2, not_fitted, train_networks, Algorithm, FitReport, NeuralConfig, Predictions,
    ProbabilisticClassifier, TrainedNetwork,
};
use crate::error::{Error, Result};
use crate::nn::{Conflictual, CrossEntropy, Objective};
use crate::posterior::PredictiveEstimate;
use crate::synthdata::{Class, LabeledPoint};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub network: TrainedNetwork,
    /// Class the conflictual term pulls toward; `None` for plain ensembles.
    pub bias_class: Option<Class>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleClassifier {
    pub neural: NeuralConfig,
    pub members: usize,
    /// Conflictual weight β; `None` trains a plain ensemble.
    pub beta: Option<f64>,
    pub fitted: Option<Vec<EnsembleMember>>,
}

impl EnsembleClassifier {
    pub fn nne(neural: NeuralConfig, members: usize) -> Self {
        Self {
            neural,
            members,
            beta: None,
            fitted: None,
        }
    }

    pub fn conflictual(neural: NeuralConfig, members: usize, beta: f64) -> Self {
        Self {
            neural,
            members,
            beta: Some(beta),
            fitted: None,
        }
    }

    /// Bias class of member `i` out of `members`.
    pub fn bias_class_of(i: usize, members: usize) -> Class {
        if i < members / 2 {
            Class::One
        } else {
            Class::Two
        }
    }

    fn validate(&self) -> Result<()> {
        if self.members < 2 {
            return Err(Error::param("an ensemble needs at least two members"));
        }
        if let Some(beta) = self.beta {
            if !self.members.is_multiple_of(2) {
                return Err(Error::param("conflictual ensembles need an even member count"));
            }
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(Error::param(format!("conflictual weight {beta} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn fitted_members(&self) -> Option<&[EnsembleMember]> {
        self.fitted.as_deref()
    }

    /// Member-by-point matrix of class-2 probabilities.
    pub fn member_probabilities(&self, points: &[[f64; 2]]) -> Result<Vec<Vec<f64>>> {
        let members = self.fitted.as_ref().ok_or_else(not_fitted)?;
        members
            .iter()
            .map(|m| network_class2(&m.network.weights, &CrossEntropy, points))
            .collect()
    }
}

impl ProbabilisticClassifier for EnsembleClassifier {
    fn algorithm(&self) -> Algorithm {
        if self.beta.is_some() {
            Algorithm::Cl
        } else {
            Algorithm::Nne
        }
    }

    fn fit(&mut self, train: &[LabeledPoint], validation: &[LabeledPoint], seed: u64) -> Result<FitReport> {
        self.validate()?;
        let mlp = self.neural.mlp(0.0);
        let members = self.members;
        let beta = self.beta;
        let objective_for = move |i: usize| -> Box<dyn Objective> {
            match beta {
                Some(beta) => Box::new(Conflictual {
                    bias_class: Self::bias_class_of(i, members),
                    beta,
                }),
                None => Box::new(CrossEntropy),
            }
        };
        let trained = train_networks(&self.neural, &mlp, &objective_for, train, validation, seed, "member", members)?;
        let diverged = trained.iter().filter(|t| t.is_none()).count();
        let survivors: Vec<EnsembleMember> = trained
            .into_iter()
            .enumerate()
            .filter_map(|(i, t)| {
                t.map(|network| EnsembleMember {
                    network,
                    bias_class: beta.map(|_| Self::bias_class_of(i, members)),
                })
            })
            .collect();
        if survivors.len() < 2 {
            return Err(Error::Diverged(format!(
                "only {} of {members} ensemble members converged",
                survivors.len()
            )));
        }
        let best = survivors
            .iter()
            .map(|m| m.network.validation_loss)
            .fold(f64::INFINITY, f64::min);
        let mut notes = Vec::new();
        if diverged > 0 {
            notes.push(format!("{diverged} member(s) diverged and were dropped"));
        }
        let report = FitReport {
            units_trained: survivors.len(),
            units_diverged: diverged,
            validation_loss: Some(best),
            notes,
        };
        self.fitted = Some(survivors);
        Ok(report)
    }

    fn predict_detailed(&self, points: &[[f64; 2]]) -> Result<Predictions> {
        let probs = self.member_probabilities(points)?;
        let mut draws = vec![0.0; probs.len()];
        let estimates = (0..points.len())
            .map(|j| {
                for (d, member) in draws.iter_mut().zip(&probs) {
                    *d = member[j];
                }
                PredictiveEstimate::from_draws(&draws)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Predictions::without_flags(estimates))
    }

    fn network_probabilities(&self, points: &[[f64; 2]]) -> Option<Result<Vec<Vec<f64>>>> {
        Some(self.member_probabilities(points))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetworkSize;
    use crate::posterior::{mc_mean, mc_uncertainty};
    use crate::synthdata::{coords_of, sample_dataset, DatasetId};

    fn quick() -> NeuralConfig {
        NeuralConfig {
            size: NetworkSize::Small,
            max_epochs: 15,
            ..NeuralConfig::default()
        }
    }

    fn data() -> (Vec<LabeledPoint>, Vec<LabeledPoint>) {
        let spec = DatasetId::A.spec();
        (sample_dataset(&spec, 300, 1).unwrap(), sample_dataset(&spec, 200, 2).unwrap())
    }

    #[test]
    fn conflictual_with_zero_beta_equals_plain_ensemble() {
        let (train, val) = data();
        let mut nne = EnsembleClassifier::nne(quick(), 4);
        let mut cl = EnsembleClassifier::conflictual(quick(), 4, 0.0);
        nne.fit(&train, &val, 9).unwrap();
        cl.fit(&train, &val, 9).unwrap();
        let pts = coords_of(&val);
        assert_eq!(nne.predict(&pts).unwrap(), cl.predict(&pts).unwrap());
        assert_eq!(cl.algorithm(), Algorithm::Cl);
    }

    #[test]
    fn estimates_are_member_statistics() {
        let (train, val) = data();
        let mut nne = EnsembleClassifier::nne(quick(), 3);
        nne.fit(&train, &val, 4).unwrap();
        let pts = [[1.0, 2.0], [-30.0, 4.0]];
        let members = nne.member_probabilities(&pts).unwrap();
        let est = nne.predict(&pts).unwrap();
        for j in 0..2 {
            let draws: Vec<f64> = members.iter().map(|m| m[j]).collect();
            assert_eq!(est[j].mean, mc_mean(&draws).unwrap());
            assert_eq!(est[j].uncertainty, mc_uncertainty(&draws).unwrap());
        }
    }

    #[test]
    fn member_bias_split_and_validation() {
        assert_eq!(EnsembleClassifier::bias_class_of(0, 20), Class::One);
        assert_eq!(EnsembleClassifier::bias_class_of(9, 20), Class::One);
        assert_eq!(EnsembleClassifier::bias_class_of(10, 20), Class::Two);
        let (train, val) = data();
        assert!(EnsembleClassifier::conflictual(quick(), 3, 0.1).fit(&train, &val, 1).is_err());
        assert!(EnsembleClassifier::nne(quick(), 1).fit(&train, &val, 1).is_err());
        assert!(EnsembleClassifier::nne(quick(), 2).predict(&[[0.0, 0.0]]).is_err());
    }
}
