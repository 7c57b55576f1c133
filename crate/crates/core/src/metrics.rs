//! Calibration and performance scores against the exact class probability.
//!
//! Predictions are class-2 probabilities. The predicted class is class 2 when
//! the probability exceeds 1/2 (ties go to class 1), and the confidence is
//! `max(p, 1 − p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthdata::Class;

/// Clipping applied inside every logarithm.
pub const PROB_CLIP: f64 = 1e-9;
pub const DEFAULT_ECE_BINS: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationBatch {
    predicted: Vec<f64>,
    labels: Vec<Class>,
    lrfd: Vec<f64>,
}

impl EvaluationBatch {
    pub fn new(predicted: Vec<f64>, labels: Vec<Class>, lrfd: Vec<f64>) -> Result<Self> {
        if predicted.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: predicted.len(),
                right: labels.len(),
            });
        }
        if predicted.len() != lrfd.len() {
            return Err(Error::LengthMismatch {
                left: predicted.len(),
                right: lrfd.len(),
            });
        }
        if predicted.is_empty() {
            return Err(Error::Empty("evaluation batch"));
        }
        for &p in predicted.iter().chain(&lrfd) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(Self { predicted, labels, lrfd })
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn lrfd(&self) -> &[f64] {
        &self.lrfd
    }
}

fn predicted_class(p: f64) -> Class {
    if p > 0.5 {
        Class::Two
    } else {
        Class::One
    }
}

fn confidence(p: f64) -> f64 {
    p.max(1.0 - p)
}

pub fn accuracy(batch: &EvaluationBatch) -> f64 {
    let correct = batch
        .predicted
        .iter()
        .zip(&batch.labels)
        .filter(|(p, c)| predicted_class(**p) == **c)
        .count();
    correct as f64 / batch.len() as f64
}

/// Mean confidence minus accuracy.
pub fn z_score(batch: &EvaluationBatch) -> f64 {
    let mean_conf = batch.predicted.iter().map(|&p| confidence(p)).sum::<f64>() / batch.len() as f64;
    mean_conf - accuracy(batch)
}

/// Expected calibration error over `bins` equal-width confidence bins on [0.5, 1].
pub fn ece(batch: &EvaluationBatch, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::param("ECE needs at least one bin"));
    }
    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut correct = vec![0usize; bins];
    for (&p, &label) in batch.predicted.iter().zip(&batch.labels) {
        let conf = confidence(p);
        let b = (((conf - 0.5) * 2.0 * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        conf_sum[b] += conf;
        if predicted_class(p) == label {
            correct[b] += 1;
        }
    }
    let n = batch.len() as f64;
    Ok((0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let nb = count[b] as f64;
            (nb / n) * (correct[b] as f64 / nb - conf_sum[b] / nb).abs()
        })
        .sum())
}

/// Mean negative log-probability of the true class.
pub fn log_loss(batch: &EvaluationBatch) -> f64 {
    let total: f64 = batch
        .predicted
        .iter()
        .zip(&batch.labels)
        .map(|(&p, &c)| {
            let q = if c.is_two() { p } else { 1.0 - p };
            -q.max(PROB_CLIP).ln()
        })
        .sum();
    total / batch.len() as f64
}

/// W₁ between two equally sized empirical distributions on the line.
pub fn wasserstein1_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// W₁ between the predicted probabilities and the LRFD values of the batch.
pub fn wasserstein1(batch: &EvaluationBatch) -> f64 {
    wasserstein1_samples(&batch.predicted, &batch.lrfd).expect("batch lengths validated")
}

/// KL(Bernoulli(ν) ‖ Bernoulli(p)) with p clipped to [1e-9, 1 − 1e-9].
pub fn bernoulli_kl(nu: f64, p: f64) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(nu, p) + term(1.0 - nu, 1.0 - p)
}

/// Mean KL divergence from the LRFD to the estimate.
pub fn mean_kl(batch: &EvaluationBatch) -> f64 {
    batch
        .predicted
        .iter()
        .zip(&batch.lrfd)
        .map(|(&p, &nu)| bernoulli_kl(nu, p))
        .sum::<f64>()
        / batch.len() as f64
}

/// Bernoulli entropy in nats.
pub fn bernoulli_entropy(nu: f64) -> f64 {
    let term = |a: f64| if a == 0.0 { 0.0 } else { -a * a.ln() };
    term(nu) + term(1.0 - nu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub z: f64,
    pub ece: f64,
    pub log_loss: f64,
    pub wasserstein1: f64,
    pub mean_kl: f64,
}

impl MetricSummary {
    pub fn compute(batch: &EvaluationBatch) -> Self {
        Self {
            accuracy: accuracy(batch),
            z: z_score(batch),
            ece: ece(batch, DEFAULT_ECE_BINS).expect("positive bin count"),
            log_loss: log_loss(batch),
            wasserstein1: wasserstein1(batch),
            mean_kl: mean_kl(batch),
        }
    }

    pub fn missing() -> Self {
        Self {
            accuracy: f64::NAN,
            z: f64::NAN,
            ece: f64::NAN,
            log_loss: f64::NAN,
            wasserstein1: f64::NAN,
            mean_kl: f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(pred: Vec<f64>, labels: Vec<Class>) -> EvaluationBatch {
        let n = pred.len();
        EvaluationBatch::new(pred, labels, vec![0.5; n]).unwrap()
    }

    #[test]
    fn accuracy_and_z() {
        let b = batch(vec![1.0, 0.0, 1.0], vec![Class::Two, Class::One, Class::Two]);
        assert_eq!(accuracy(&b), 1.0);
        assert_eq!(z_score(&b), 0.0);
        let b = batch(vec![1.0, 1.0], vec![Class::Two, Class::One]);
        assert_eq!(z_score(&b), 0.5);
        // tie goes to class 1
        let b = batch(vec![0.5], vec![Class::One]);
        assert_eq!(accuracy(&b), 1.0);
        let pred = vec![0.8; 10];
        let labels: Vec<Class> = (0..10).map(|i| if i < 8 { Class::Two } else { Class::One }).collect();
        assert!(z_score(&batch(pred, labels)).abs() < 1e-12);
    }

    #[test]
    fn ece_examples() {
        let b = batch(vec![1.0; 4], vec![Class::Two; 4]);
        assert_eq!(ece(&b, 15).unwrap(), 0.0);
        let labels: Vec<Class> = (0..10).map(|i| if i < 7 { Class::Two } else { Class::One }).collect();
        assert!(ece(&batch(vec![0.7; 10], labels), 15).unwrap() < 1e-12);
        assert!(ece(&b, 0).is_err());
    }

    #[test]
    fn ece_hand_construction() {
        // bin at confidence 0.6: 100 points, 50 correct; bin at 0.9: 100 points, 90 correct
        let mut pred = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            pred.push(0.6);
            labels.push(if i < 50 { Class::Two } else { Class::One });
        }
        for i in 0..100 {
            pred.push(0.9);
            labels.push(if i < 90 { Class::Two } else { Class::One });
        }
        let e = ece(&batch(pred, labels), 15).unwrap();
        assert!((e - 0.05).abs() < 1e-12, "{e}");
    }

    #[test]
    fn log_loss_examples() {
        let b = batch(vec![1.0, 0.0], vec![Class::Two, Class::One]);
        assert!(log_loss(&b) < 1e-12);
        let b = batch(vec![0.5; 6], vec![Class::Two, Class::One, Class::Two, Class::Two, Class::One, Class::One]);
        assert!((log_loss(&b) - std::f64::consts::LN_2).abs() < 1e-15);
        // confident error is clipped, not infinite
        let b = batch(vec![0.0], vec![Class::Two]);
        assert!((log_loss(&b) + PROB_CLIP.ln()).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_examples() {
        let nu = vec![0.1, 0.4, 0.3, 0.7];
        let b = EvaluationBatch::new(nu.clone(), vec![Class::One; 4], nu.clone()).unwrap();
        assert_eq!(wasserstein1(&b), 0.0);
        let shifted: Vec<f64> = nu.iter().map(|v| v + 0.1).collect();
        let b = EvaluationBatch::new(shifted, vec![Class::One; 4], nu).unwrap();
        assert!((wasserstein1(&b) - 0.1).abs() < 1e-12);
        assert!(wasserstein1_samples(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn kl_examples() {
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((bernoulli_kl(0.5, 0.25) - expected).abs() < 1e-15);
        assert!((expected - 0.14384).abs() < 1e-5);
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        for nu in [0.0, 1.0] {
            for p in [0.0, 0.3, 1.0] {
                assert!(bernoulli_kl(nu, p).is_finite());
            }
        }
    }

    #[test]
    fn batch_validation() {
        assert!(EvaluationBatch::new(vec![], vec![], vec![]).is_err());
        assert!(EvaluationBatch::new(vec![0.1], vec![Class::One, Class::Two], vec![0.1]).is_err());
        assert!(EvaluationBatch::new(vec![1.1], vec![Class::One], vec![0.1]).is_err());
    }
}
