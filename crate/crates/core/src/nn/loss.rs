//! Training objectives on two-class logits.
//!
//! The scalar functions (`cross_entropy`, `conflictual_loss`, `edl_loss`) return
//! sums over the batch. The [`Objective`] implementations return the batch mean
//! together with its gradient with respect to the logits.

use ndarray::{Array2, ArrayView2};

use crate::metrics::PROB_CLIP;
use crate::nn::mlp::softmax_row;
use crate::special::{digamma, ln_gamma, sigmoid, softplus, trigamma};
use crate::synthdata::Class;

/// Epoch count over which the evidential regularizer ramps up to full weight.
pub const EDL_ANNEAL_EPOCHS: usize = 200;

pub trait Objective: Send + Sync {
    fn name(&self) -> &'static str;

    /// Batch-mean loss and its gradient with respect to the logits.
    fn loss_and_grad(&self, logits: ArrayView2<f64>, labels: &[Class], epoch: usize) -> (f64, Array2<f64>);

    /// Class-2 predictive probability implied by one row of logits.
    fn class2_probability(&self, logits: [f64; 2]) -> f64 {
        softmax_row(logits)[1]
    }
}

fn ln_clip() -> f64 {
    PROB_CLIP.ln()
}

/// −log p_y with the probability clipped at 1e-9, from logits.
fn clipped_nll(z: [f64; 2], y: usize) -> (f64, bool) {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    let log_p = z[y] - lse;
    if log_p < ln_clip() {
        (-ln_clip(), true)
    } else {
        (-log_p, false)
    }
}

fn row(logits: &ArrayView2<f64>, i: usize) -> [f64; 2] {
    [logits[[i, 0]], logits[[i, 1]]]
}

/// Summed cross-entropy of probability rows against labels.
pub fn cross_entropy(probabilities: ArrayView2<f64>, labels: &[Class]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, c)| -probabilities[[i, c.index()]].max(PROB_CLIP).ln())
        .sum()
}

/// Summed conflictual loss: cross-entropy plus a pull of weight β toward the bias class.
pub fn conflictual_loss(probabilities: ArrayView2<f64>, labels: &[Class], bias_class: Class, beta: f64) -> f64 {
    let bias: f64 = (0..labels.len())
        .map(|i| -probabilities[[i, bias_class.index()]].max(PROB_CLIP).ln())
        .sum();
    cross_entropy(probabilities, labels) + beta * bias
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CrossEntropy;

impl Objective for CrossEntropy {
    fn name(&self) -> &'static str {
        "cross_entropy"
    }

    fn loss_and_grad(&self, logits: ArrayView2<f64>, labels: &[Class], _epoch: usize) -> (f64, Array2<f64>) {
        let n = labels.len() as f64;
        let mut grad = Array2::zeros(logits.dim());
        let mut total = 0.0;
        for (i, c) in labels.iter().enumerate() {
            let z = row(&logits, i);
            let (l, clipped) = clipped_nll(z, c.index());
            total += l;
            if !clipped {
                let p = softmax_row(z);
                for k in 0..2 {
                    let y = if k == c.index() { 1.0 } else { 0.0 };
                    grad[[i, k]] = (p[k] - y) / n;
                }
            }
        }
        (total / n, grad)
    }
}

/// Cross-entropy plus β times the cross-entropy toward a fixed bias class.
#[derive(Debug, Clone, Copy)]
pub struct Conflictual {
    pub bias_class: Class,
    pub beta: f64,
}

impl Objective for Conflictual {
    fn name(&self) -> &'static str {
        "conflictual"
    }

    fn loss_and_grad(&self, logits: ArrayView2<f64>, labels: &[Class], epoch: usize) -> (f64, Array2<f64>) {
        let (ce, mut grad) = CrossEntropy.loss_and_grad(logits, labels, epoch);
        if self.beta == 0.0 {
            return (ce, grad);
        }
        let n = labels.len() as f64;
        let b = self.bias_class.index();
        let mut bias_total = 0.0;
        for i in 0..labels.len() {
            let z = row(&logits, i);
            let (l, clipped) = clipped_nll(z, b);
            bias_total += l;
            if !clipped {
                let p = softmax_row(z);
                for k in 0..2 {
                    let y = if k == b { 1.0 } else { 0.0 };
                    grad[[i, k]] += self.beta * (p[k] - y) / n;
                }
            }
        }
        (ce + self.beta * bias_total / n, grad)
    }
}

/// Dirichlet concentration α = softplus(z) + 1 of a two-class evidential head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletOutput {
    pub alpha: [f64; 2],
}

impl DirichletOutput {
    pub fn from_logits(z: [f64; 2]) -> Self {
        Self {
            alpha: [softplus(z[0]) + 1.0, softplus(z[1]) + 1.0],
        }
    }

    pub fn evidence(&self) -> [f64; 2] {
        [self.alpha[0] - 1.0, self.alpha[1] - 1.0]
    }

    pub fn strength(&self) -> f64 {
        self.alpha[0] + self.alpha[1]
    }

    pub fn mean_class2(&self) -> f64 {
        self.alpha[1] / self.strength()
    }

    /// Variance of the class-2 component under the Dirichlet.
    pub fn variance_class2(&self) -> f64 {
        let s = self.strength();
        self.alpha[0] * self.alpha[1] / (s * s * (s + 1.0))
    }
}

/// KL(Dir(α) ‖ Dir(1, 1)).
pub fn kl_dirichlet_uniform(alpha: [f64; 2]) -> f64 {
    let s = alpha[0] + alpha[1];
    let ds = digamma(s);
    ln_gamma(s) - ln_gamma(2.0) - ln_gamma(alpha[0]) - ln_gamma(alpha[1])
        + (alpha[0] - 1.0) * (digamma(alpha[0]) - ds)
        + (alpha[1] - 1.0) * (digamma(alpha[1]) - ds)
}

/// Regularizer weight λ(t) = λ₀ · min(1, t / 200).
pub fn edl_annealing(epoch: usize, lambda0: f64) -> f64 {
    lambda0 * (epoch as f64 / EDL_ANNEAL_EPOCHS as f64).min(1.0)
}

/// Concentration with the true-class entry reset to 1.
fn misleading_alpha(alpha: [f64; 2], y: usize) -> [f64; 2] {
    let mut a = alpha;
    a[y] = 1.0;
    a
}

fn edl_point(z: [f64; 2], y: usize, lambda: f64) -> (f64, [f64; 2]) {
    let alpha = DirichletOutput::from_logits(z).alpha;
    let s = alpha[0] + alpha[1];
    let risk = digamma(s) - digamma(alpha[y]);
    let tilde = misleading_alpha(alpha, y);
    let kl = kl_dirichlet_uniform(tilde);

    let ts = trigamma(s);
    let s_tilde = tilde[0] + tilde[1];
    let mut grad = [0.0; 2];
    for k in 0..2 {
        let mut d_alpha = ts;
        if k == y {
            d_alpha -= trigamma(alpha[y]);
        } else {
            d_alpha += lambda * ((tilde[k] - 1.0) * trigamma(tilde[k]) - (s_tilde - 2.0) * trigamma(s_tilde));
        }
        grad[k] = d_alpha * sigmoid(z[k]);
    }
    (risk + lambda * kl, grad)
}

/// Summed evidential loss (Bayes risk of cross-entropy plus annealed KL).
pub fn edl_loss(logits: ArrayView2<f64>, labels: &[Class], epoch: usize, lambda0: f64) -> f64 {
    let lambda = edl_annealing(epoch, lambda0);
    labels
        .iter()
        .enumerate()
        .map(|(i, c)| edl_point(row(&logits, i), c.index(), lambda).0)
        .sum()
}

#[derive(Debug, Clone, Copy)]
pub struct Evidential {
    pub lambda0: f64,
}

impl Objective for Evidential {
    fn name(&self) -> &'static str {
        "evidential"
    }

    fn loss_and_grad(&self, logits: ArrayView2<f64>, labels: &[Class], epoch: usize) -> (f64, Array2<f64>) {
        let lambda = edl_annealing(epoch, self.lambda0);
        let n = labels.len() as f64;
        let mut grad = Array2::zeros(logits.dim());
        let mut total = 0.0;
        for (i, c) in labels.iter().enumerate() {
            let (l, g) = edl_point(row(&logits, i), c.index(), lambda);
            total += l;
            grad[[i, 0]] = g[0] / n;
            grad[[i, 1]] = g[1] / n;
        }
        (total / n, grad)
    }

    fn class2_probability(&self, logits: [f64; 2]) -> f64 {
        DirichletOutput::from_logits(logits).mean_class2()
    }
}
