//! Beta–Bernoulli posterior moments and Monte Carlo predictive estimates.
//!
//! With a symmetric Beta(c, c) prior and S successes in N trials the
//! posterior has
//!
//! ```text
//! E[ν]   = (S + c) / (N + 2c)
//! Var[ν] = E[ν](1 − E[ν]) / (N + 2c + 1)
//! ```
//!
//! Every sampling-based classifier in the crate reduces its T posterior draws
//! of the class-2 probability with [`mc_mean`] and [`mc_uncertainty`]; the
//! uncertainty uses the population (1/T) variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBernoulliPosterior {
    trials: u64,
    successes: u64,
    prior_strength: f64,
}

impl BetaBernoulliPosterior {
    pub fn new(trials: u64, successes: u64, prior_strength: f64) -> Result<Self> {
        if successes > trials {
            return Err(Error::param(format!("{successes} successes exceed {trials} trials")));
        }
        if !(prior_strength.is_finite() && prior_strength >= 0.0) {
            return Err(Error::param(format!(
                "prior strength must be finite and non-negative, got {prior_strength}"
            )));
        }
        Ok(Self {
            trials,
            successes,
            prior_strength,
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn prior_strength(&self) -> f64 {
        self.prior_strength
    }

    fn denominator(&self) -> Result<f64> {
        let d = self.trials as f64 + 2.0 * self.prior_strength;
        if d == 0.0 {
            Err(Error::DegeneratePrior)
        } else {
            Ok(d)
        }
    }

    pub fn mean(&self) -> Result<f64> {
        Ok((self.successes as f64 + self.prior_strength) / self.denominator()?)
    }

    pub fn variance(&self) -> Result<f64> {
        let m = self.mean()?;
        Ok(m * (1.0 - m) / (self.denominator()? + 1.0))
    }

    pub fn std_dev(&self) -> Result<f64> {
        self.variance().map(f64::sqrt)
    }
}

pub fn beta_bernoulli_mean(post: &BetaBernoulliPosterior) -> Result<f64> {
    post.mean()
}

pub fn beta_bernoulli_variance(post: &BetaBernoulliPosterior) -> Result<f64> {
    post.variance()
}

/// T posterior draws of the class-2 probability at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSampleSet(Vec<f64>);

impl PosteriorSampleSet {
    pub fn new(draws: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::Empty("posterior sample set"));
        }
        if let Some(bad) = draws.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::param(format!("posterior draw {bad} outside [0, 1]")));
        }
        Ok(Self(draws))
    }

    pub fn draws(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn estimate(&self) -> PredictiveEstimate {
        PredictiveEstimate::from_draws_unchecked(&self.0)
    }
}

/// Arithmetic mean of the draws.
pub fn mc_mean(draws: &[f64]) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Empty("posterior sample set"));
    }
    // shifting by the first draw keeps constant draws exact
    let x0 = draws[0];
    Ok(x0 + draws.iter().map(|p| p - x0).sum::<f64>() / draws.len() as f64)
}

/// Square root of the population variance of the draws.
pub fn mc_uncertainty(draws: &[f64]) -> Result<f64> {
    let mean = mc_mean(draws)?;
    let var = draws.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / draws.len() as f64;
    if draws.iter().all(|&p| p == draws[0]) {
        return Ok(0.0);
    }
    // draws in [0, 1] cannot spread wider than 1/2; clamp rounding
    Ok(var.sqrt().min(0.5))
}

/// Predictive class-2 probability with its standard uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveEstimate {
    pub mean: f64,
    pub uncertainty: f64,
}

impl PredictiveEstimate {
    pub fn new(mean: f64, uncertainty: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mean) || !(0.0..=0.5).contains(&uncertainty) {
            return Err(Error::param(format!(
                "estimate ({mean}, {uncertainty}) outside [0,1] x [0,0.5]"
            )));
        }
        Ok(Self { mean, uncertainty })
    }

    /// Monte Carlo mean and uncertainty of the draws.
    pub fn from_draws(draws: &[f64]) -> Result<Self> {
        Ok(Self {
            mean: mc_mean(draws)?.clamp(0.0, 1.0),
            uncertainty: mc_uncertainty(draws)?,
        })
    }

    pub(crate) fn from_draws_unchecked(draws: &[f64]) -> Self {
        Self::from_draws(draws).expect("non-empty draws")
    }
}
