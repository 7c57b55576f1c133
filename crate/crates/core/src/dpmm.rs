//! Truncated Dirichlet-process mixture of product kernels, fitted by blocked
//! Gibbs sampling.
//!
//! Each component is an axis-parallel Gaussian over (x1, x2) times a
//! Bernoulli over the class. Per-feature means and variances carry a
//! Normal–Inverse-Gamma prior and the class parameter a Beta(1, 1) prior.
//! Mixture weights follow a stick-breaking construction truncated at M
//! components. The class-2 probability at x under one draw is
//!
//! ```text
//! Q(c²|x) = Σ wᵢ gᵢ(x) θᵢ / Σ wᵢ gᵢ(x)
//! ```
//!
//! evaluated in log space.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{not_fitted, Algorithm, FitReport, Predictions, ProbabilisticClassifier};
use crate::error::{Error, Result};
use crate::posterior::PredictiveEstimate;
use crate::rng::{beta, derive_seed, inverse_gamma, standard_normal, stream};
use crate::synthdata::LabeledPoint;

const THETA_FLOOR: f64 = 1e-15;

/// Chains, burn-in sweeps per chain and retained draws per chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcBudget {
    pub chains: usize,
    pub burn_in: usize,
    pub samples: usize,
}

impl McmcBudget {
    /// 4 chains × 300 draws after 900 burn-in sweeps.
    pub fn desk() -> Self {
        Self {
            chains: 4,
            burn_in: 900,
            samples: 300,
        }
    }

    /// 10 chains × 120 draws after 3600 burn-in sweeps.
    pub fn full() -> Self {
        Self {
            chains: 10,
            burn_in: 3600,
            samples: 120,
        }
    }

    /// 2 chains × 150 draws after 450 burn-in sweeps.
    pub fn fast() -> Self {
        Self {
            chains: 2,
            burn_in: 450,
            samples: 150,
        }
    }

    pub fn total_draws(&self) -> usize {
        self.chains * self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpmmConfig {
    pub truncation: usize,
    pub concentration: f64,
    /// Prior pseudo-count on each component mean.
    pub kappa0: f64,
    /// Inverse-gamma shape on each component variance.
    pub a0: f64,
    pub budget: McmcBudget,
}

impl Default for DpmmConfig {
    fn default() -> Self {
        Self {
            truncation: 64,
            concentration: 1.0,
            kappa0: 0.01,
            a0: 1.0,
            budget: McmcBudget::desk(),
        }
    }
}

impl DpmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(Error::param("truncation must be positive"));
        }
        for (name, v) in [
            ("concentration", self.concentration),
            ("kappa0", self.kappa0),
            ("a0", self.a0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        let b = self.budget;
        if b.chains == 0 || b.samples == 0 {
            return Err(Error::param("MCMC budget needs at least one chain and one draw"));
        }
        Ok(())
    }
}

/// Normal–Inverse-Gamma hyperparameters per feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigPrior {
    pub location: [f64; 2],
    pub kappa0: f64,
    pub shape: f64,
    pub rate: [f64; 2],
}

impl NigPrior {
    /// Location at the feature means and rate at the feature variances.
    pub fn empirical(points: &[[f64; 2]], kappa0: f64, shape: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("DPMM training set"));
        }
        let n = points.len() as f64;
        let mut location = [0.0; 2];
        let mut rate = [0.0; 2];
        for d in 0..2 {
            let mean = points.iter().map(|p| p[d]).sum::<f64>() / n;
            let var = points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n;
            location[d] = mean;
            // a single point (or a constant feature) still needs a proper prior
            rate[d] = if var > 0.0 { var } else { 1.0 };
        }
        Ok(Self {
            location,
            kappa0,
            shape,
            rate,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub mean: [f64; 2],
    pub variance: [f64; 2],
    /// Class-2 Bernoulli parameter.
    pub theta: f64,
}

impl Component {
    /// Log of the product of the two Gaussian feature densities.
    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        (0..2)
            .map(|d| {
                let v = self.variance[d];
                -0.5 * (2.0 * PI * v).ln() - (x[d] - self.mean[d]).powi(2) / (2.0 * v)
            })
            .sum()
    }

    pub fn density(&self, x: [f64; 2]) -> f64 {
        self.log_density(x).exp()
    }
}

/// One retained state of the sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsDraw {
    pub weights: Vec<f64>,
    pub components: Vec<Component>,
}

/// Conditional class-2 probability, with a flag for the prior-predictive fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditional {
    pub class2: f64,
    pub fallback: bool,
}

impl GibbsDraw {
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.components.len() || self.weights.is_empty() {
            return Err(Error::Malformed("draw weights and components differ in length".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Malformed(format!("draw weights sum to {total}")));
        }
        for c in &self.components {
            if !(c.variance[0] > 0.0 && c.variance[1] > 0.0) || !(c.theta > 0.0 && c.theta < 1.0) {
                return Err(Error::Malformed("component parameters out of range".into()));
            }
        }
        Ok(())
    }

    /// Q(c²|x) computed with log-sum-exp over the components.
    pub fn conditional(&self, x: [f64; 2]) -> Conditional {
        let logs: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.log_density(x))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            let theta = self.weights.iter().zip(&self.components).map(|(w, c)| w * c.theta).sum();
            return Conditional {
                class2: theta,
                fallback: true,
            };
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (l, c) in logs.iter().zip(&self.components) {
            let e = (l - m).exp();
            num += e * c.theta;
            den += e;
        }
        Conditional {
            class2: (num / den).clamp(0.0, 1.0),
            fallback: false,
        }
    }

    /// Mixture density of the features at x.
    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        let logs: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.log_density(x))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return f64::NEG_INFINITY;
        }
        m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }
}

pub fn dpmm_conditional(draw: &GibbsDraw, x: [f64; 2]) -> Conditional {
    draw.conditional(x)
}

/// Retained draws from all chains, chain-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDrawSet {
    pub prior: NigPrior,
    pub config: DpmmConfig,
    pub draws: Vec<GibbsDraw>,
    /// Chain index of each draw.
    pub chain: Vec<usize>,
}

impl PosteriorDrawSet {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Mean mixture density over draws at x.
    pub fn predictive_density(&self, x: [f64; 2]) -> f64 {
        self.draws.iter().map(|d| d.log_density(x).exp()).sum::<f64>() / self.draws.len() as f64
    }
}

/// Per-point estimates over the draws; a point is flagged if any draw fell back.
pub fn dpmm_predict(set: &PosteriorDrawSet, points: &[[f64; 2]]) -> Result<Predictions> {
    if set.draws.is_empty() {
        return Err(Error::Empty("posterior draw set"));
    }
    let rows: Vec<(PredictiveEstimate, bool)> = points
        .par_iter()
        .map(|&x| {
            let mut flag = false;
            let values: Vec<f64> = set
                .draws
                .iter()
                .map(|d| {
                    let c = d.conditional(x);
                    flag |= c.fallback;
                    c.class2
                })
                .collect();
            PredictiveEstimate::from_draws(&values).map(|e| (e, flag))
        })
        .collect::<Result<_>>()?;
    let (estimates, tail_flags) = rows.into_iter().unzip();
    Ok(Predictions { estimates, tail_flags })
}

#[derive(Default, Clone, Copy)]
struct Stats {
    n: usize,
    sum: [f64; 2],
    sumsq: [f64; 2],
    class2: usize,
}

fn sample_component<R: Rng + ?Sized>(rng: &mut R, prior: &NigPrior, s: &Stats) -> Component {
    let n = s.n as f64;
    let mut mean = [0.0; 2];
    let mut variance = [0.0; 2];
    for d in 0..2 {
        let kn = prior.kappa0 + n;
        let (mn, bn) = if s.n == 0 {
            (prior.location[d], prior.rate[d])
        } else {
            let xbar = s.sum[d] / n;
            let ss = (s.sumsq[d] - n * xbar * xbar).max(0.0);
            (
                (prior.kappa0 * prior.location[d] + s.sum[d]) / kn,
                prior.rate[d] + 0.5 * ss + prior.kappa0 * n * (xbar - prior.location[d]).powi(2) / (2.0 * kn),
            )
        };
        let an = prior.shape + 0.5 * n;
        let v = inverse_gamma(rng, an, bn).max(f64::MIN_POSITIVE);
        variance[d] = v;
        mean[d] = mn + (v / kn).sqrt() * standard_normal(rng);
    }
    let theta = beta(rng, 1.0 + s.class2 as f64, 1.0 + (s.n - s.class2) as f64).clamp(THETA_FLOOR, 1.0 - THETA_FLOOR);
    Component { mean, variance, theta }
}

fn stick_weights<R: Rng + ?Sized>(rng: &mut R, counts: &[usize], alpha: f64) -> Vec<f64> {
    let m = counts.len();
    let mut tail: usize = counts.iter().sum();
    let mut remaining = 1.0;
    let mut w = Vec::with_capacity(m);
    for (k, &nk) in counts.iter().enumerate() {
        tail -= nk;
        let v = if k + 1 == m {
            1.0
        } else {
            beta(rng, 1.0 + nk as f64, alpha + tail as f64)
        };
        w.push(remaining * v);
        remaining *= 1.0 - v;
    }
    // renormalize away rounding so the simplex constraint holds tightly
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

fn run_chain(
    x: &[[f64; 2]],
    t: &[bool],
    prior: &NigPrior,
    cfg: &DpmmConfig,
    seed: u64,
) -> Vec<GibbsDraw> {
    let m = cfg.truncation;
    let n = x.len();
    let mut rng = stream(seed, "gibbs");
    let mut z: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
    let mut draws = Vec::with_capacity(cfg.budget.samples);
    let mut logp = vec![0.0; m];
    let sweeps = cfg.budget.burn_in + cfg.budget.samples;
    for sweep in 0..sweeps {
        let mut stats = vec![Stats::default(); m];
        for (i, &k) in z.iter().enumerate() {
            let s = &mut stats[k];
            s.n += 1;
            for d in 0..2 {
                s.sum[d] += x[i][d];
                s.sumsq[d] += x[i][d] * x[i][d];
            }
            s.class2 += t[i] as usize;
        }
        let components: Vec<Component> = stats.iter().map(|s| sample_component(&mut rng, prior, s)).collect();
        let counts: Vec<usize> = stats.iter().map(|s| s.n).collect();
        let weights = stick_weights(&mut rng, &counts, cfg.concentration);

        // per-component constants of the assignment log-probabilities
        let consts: Vec<(f64, [f64; 2], f64, f64)> = weights
            .iter()
            .zip(&components)
            .map(|(w, c)| {
                let base = w.ln() - 0.5 * (2.0 * PI * c.variance[0]).ln() - 0.5 * (2.0 * PI * c.variance[1]).ln();
                (
                    base,
                    [0.5 / c.variance[0], 0.5 / c.variance[1]],
                    c.theta.ln(),
                    (1.0 - c.theta).ln(),
                )
            })
            .collect();
        for i in 0..n {
            let mut best = f64::NEG_INFINITY;
            for (k, (base, half_prec, l2, l1)) in consts.iter().enumerate() {
                let c = &components[k];
                let dx = x[i][0] - c.mean[0];
                let dy = x[i][1] - c.mean[1];
                let v = base - dx * dx * half_prec[0] - dy * dy * half_prec[1] + if t[i] { *l2 } else { *l1 };
                logp[k] = v;
                best = best.max(v);
            }
            let mut total = 0.0;
            for v in logp.iter_mut() {
                *v = (*v - best).exp();
                total += *v;
            }
            let mut u = rng.random::<f64>() * total;
            let mut chosen = m - 1;
            for (k, v) in logp.iter().enumerate() {
                if u < *v {
                    chosen = k;
                    break;
                }
                u -= v;
            }
            z[i] = chosen;
        }
        if sweep >= cfg.budget.burn_in {
            draws.push(GibbsDraw { weights, components });
        }
    }
    draws
}

/// Runs the configured chains in parallel; chain `c` uses stream `chain/{c}`.
pub fn gibbs_fit(train: &[LabeledPoint], cfg: &DpmmConfig, seed: u64) -> Result<PosteriorDrawSet> {
    cfg.validate()?;
    let x: Vec<[f64; 2]> = train.iter().map(|p| p.coords()).collect();
    let prior = NigPrior::empirical(&x, cfg.kappa0, cfg.a0)?;
    let t: Vec<bool> = train.iter().map(|p| p.label.is_two()).collect();
    let per_chain: Vec<Vec<GibbsDraw>> = (0..cfg.budget.chains)
        .into_par_iter()
        .map(|c| run_chain(&x, &t, &prior, cfg, derive_seed(seed, &format!("chain/{c}"))))
        .collect();
    let mut draws = Vec::with_capacity(cfg.budget.total_draws());
    let mut chain = Vec::with_capacity(cfg.budget.total_draws());
    for (c, d) in per_chain.into_iter().enumerate() {
        chain.extend(std::iter::repeat_n(c, d.len()));
        draws.extend(d);
    }
    Ok(PosteriorDrawSet {
        prior,
        config: *cfg,
        draws,
        chain,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpmmClassifier {
    pub config: DpmmConfig,
    pub fitted: Option<PosteriorDrawSet>,
}

impl DpmmClassifier {
    pub fn new(config: DpmmConfig) -> Self {
        Self { config, fitted: None }
    }
}

impl ProbabilisticClassifier for DpmmClassifier {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Dpmm
    }

    fn fit(&mut self, train: &[LabeledPoint], _validation: &[LabeledPoint], seed: u64) -> Result<FitReport> {
        let set = gibbs_fit(train, &self.config, seed)?;
        let b = self.config.budget;
        let report = FitReport {
            units_trained: b.chains,
            units_diverged: 0,
            validation_loss: None,
            notes: vec![format!(
                "{} chains x {} draws after {} burn-in sweeps, M={}",
                b.chains, b.samples, b.burn_in, self.config.truncation
            )],
        };
        self.fitted = Some(set);
        Ok(report)
    }

    fn predict_detailed(&self, points: &[[f64; 2]]) -> Result<Predictions> {
        dpmm_predict(self.fitted.as_ref().ok_or_else(not_fitted)?, points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::Class;

    fn comp(mean: [f64; 2], var: f64, theta: f64) -> Component {
        Component {
            mean,
            variance: [var, var],
            theta,
        }
    }

    #[test]
    fn single_component_returns_theta() {
        let d = GibbsDraw {
            weights: vec![1.0],
            components: vec![comp([0.0, 0.0], 1.0, 0.7)],
        };
        for x in [[0.0, 0.0], [5.0, -3.0], [1e4, 1e4]] {
            assert!((d.conditional(x).class2 - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn equidistant_query_is_half() {
        let d = GibbsDraw {
            weights: vec![0.5, 0.5],
            components: vec![comp([-2.0, 0.0], 1.0, THETA_FLOOR), comp([2.0, 0.0], 1.0, 1.0 - THETA_FLOOR)],
        };
        assert!((d.conditional([0.0, 3.0]).class2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn log_space_matches_linear_space() {
        let d = GibbsDraw {
            weights: vec![0.2, 0.5, 0.3],
            components: vec![comp([1.0, 2.0], 4.0, 0.1), comp([-3.0, 0.0], 9.0, 0.8), comp([5.0, 5.0], 2.0, 0.5)],
        };
        for x in [[0.0, 0.0], [2.0, -1.0], [6.0, 4.0], [-8.0, 3.0]] {
            let num: f64 = d.weights.iter().zip(&d.components).map(|(w, c)| w * c.density(x) * c.theta).sum();
            let den: f64 = d.weights.iter().zip(&d.components).map(|(w, c)| w * c.density(x)).sum();
            assert!((d.conditional(x).class2 - num / den).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_weights_fall_back_to_weighted_theta() {
        // a component whose log weight is −∞ everywhere forces the fallback
        let d = GibbsDraw {
            weights: vec![0.0],
            components: vec![comp([0.0, 0.0], 1.0, 0.3)],
        };
        let c = d.conditional([1.0, 1.0]);
        assert!(c.fallback);
        assert_eq!(c.class2, 0.0);
    }

    #[test]
    fn stick_weights_sum_to_one() {
        let mut rng = crate::rng::seeded(1);
        let w = stick_weights(&mut rng, &[10, 0, 3, 0, 0, 7, 0, 0], 1.0);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn single_component_class_posterior_is_beta() {
        let pts: Vec<LabeledPoint> = (0..40)
            .map(|i| LabeledPoint::new(i as f64, 0.5 * i as f64, if i % 4 == 0 { Class::Two } else { Class::One }))
            .collect();
        let cfg = DpmmConfig {
            truncation: 1,
            budget: McmcBudget {
                chains: 2,
                burn_in: 5,
                samples: 2000,
            },
            ..DpmmConfig::default()
        };
        let set = gibbs_fit(&pts, &cfg, 3).unwrap();
        let est = dpmm_predict(&set, &[[3.0, 3.0]]).unwrap().estimates[0];
        // Beta(11, 31)
        let mean = 11.0 / 42.0;
        let sd = (11.0 * 31.0 / (42.0f64 * 42.0 * 43.0)).sqrt();
        assert!((est.mean - mean).abs() < 3.0 * sd / (4000f64).sqrt());
        assert!((est.uncertainty - sd).abs() < 0.1 * sd);
    }

    #[test]
    fn chains_are_reproducible() {
        let pts = crate::synthdata::sample_dataset(&crate::synthdata::DatasetId::B.spec(), 60, 2).unwrap();
        let cfg = DpmmConfig {
            truncation: 8,
            budget: McmcBudget {
                chains: 2,
                burn_in: 10,
                samples: 5,
            },
            ..DpmmConfig::default()
        };
        let a = gibbs_fit(&pts, &cfg, 11).unwrap();
        let b = gibbs_fit(&pts, &cfg, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        for d in &a.draws {
            d.validate().unwrap();
        }
    }
}
