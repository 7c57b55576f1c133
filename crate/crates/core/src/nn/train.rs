use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PROB_CLIP;
use crate::nn::loss::Objective;
use crate::nn::mlp::{features, DropoutMasks, MlpConfig, NetworkWeights};
use crate::nn::optim::{AdamW, AdamWConfig};
use crate::rng::seeded;
use crate::synthdata::{Class, LabeledPoint};

/// Mini-batch size by training-set size.
pub const BATCH_SCHEDULE: [(usize, usize); 7] = [
    (250, 128),
    (500, 128),
    (1000, 256),
    (2000, 256),
    (3000, 1024),
    (5000, 1024),
    (10000, 2048),
];

/// Batch size for `n_train` points: the entry of the largest scheduled size not above it.
pub fn batch_size_for(n_train: usize) -> usize {
    BATCH_SCHEDULE
        .iter()
        .rev()
        .find(|(n, _)| *n <= n_train)
        .map(|&(_, b)| b)
        .unwrap_or(BATCH_SCHEDULE[0].1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
}

impl TrainConfig {
    /// Default schedule: lr 1e-3, weight decay 0.01, 200 epochs, patience 20.
    pub fn for_train_size(n_train: usize) -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 0.01,
            max_epochs: 200,
            patience: 20,
            batch_size: batch_size_for(n_train),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(format!("learning rate {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::param(format!("weight decay {}", self.weight_decay)));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::param("epochs and batch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub weights: NetworkWeights,
    pub best_validation_loss: f64,
    /// 1-based epoch of the retained snapshot.
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Mean clipped cross-entropy of the objective's class-2 probability on `points`,
/// evaluated without dropout.
pub fn validation_loss(weights: &NetworkWeights, objective: &dyn Objective, points: &[LabeledPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let logits = weights.logits(features(points).view())?;
    let total: f64 = points
        .iter()
        .zip(logits.rows())
        .map(|(pt, z)| {
            let p2 = objective.class2_probability([z[0], z[1]]);
            let q = if pt.label.is_two() { p2 } else { 1.0 - p2 };
            -q.max(PROB_CLIP).ln()
        })
        .sum();
    Ok(total / points.len() as f64)
}

/// Mini-batch AdamW training with early stopping on validation loss.
///
/// Returns the snapshot with the lowest validation loss. Dropout masks are
/// drawn per batch from the same stream as the shuffles.
pub fn train(
    init: NetworkWeights,
    mlp: &MlpConfig,
    data: &[LabeledPoint],
    cfg: &TrainConfig,
    objective: &dyn Objective,
    validation: &[LabeledPoint],
    seed: u64,
) -> Result<TrainOutcome> {
    mlp.validate()?;
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if !init.matches(mlp) {
        return Err(Error::param("initial weights do not match the architecture"));
    }
    let x = features(data);
    let labels: Vec<Class> = data.iter().map(|p| p.label).collect();
    let mut rng = seeded(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut weights = init;
    let mut opt = AdamW::new(AdamWConfig::new(cfg.learning_rate, cfg.weight_decay), &weights);

    let mut best: Option<(f64, usize, NetworkWeights)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb: Array2<f64> = x.select(Axis(0), batch);
            let lb: Vec<Class> = batch.iter().map(|&i| labels[i]).collect();
            let masks = DropoutMasks::sample(&mut rng, batch.len(), mlp);
            let (logits, cache) = weights.forward_cached(xb.view(), masks.as_ref())?;
            let (loss, dlogits) = objective.loss_and_grad(logits.view(), &lb, epoch);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("non-finite {} loss at epoch {epoch}", objective.name())));
            }
            let grads = weights.backward(&cache, masks.as_ref(), dlogits.view());
            opt.step(&mut weights, &grads);
        }
        epochs_run = epoch + 1;
        if !weights.is_finite() {
            return Err(Error::Diverged(format!("non-finite weights at epoch {epochs_run}")));
        }
        let vl = validation_loss(&weights, objective, validation)?;
        if !vl.is_finite() {
            return Err(Error::Diverged(format!("non-finite validation loss at epoch {epochs_run}")));
        }
        match &best {
            Some((b, _, _)) if vl >= *b => {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
            _ => {
                best = Some((vl, epochs_run, weights.clone()));
                since_best = 0;
            }
        }
    }
    let (best_validation_loss, best_epoch, weights) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        weights,
        best_validation_loss,
        best_epoch,
        epochs_run,
    })
}
