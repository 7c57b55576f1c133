//! Score a deliberately overconfident estimator against the exact class
//! probability of dataset A.

use uqbench::metrics::{ece, EvaluationBatch, MetricSummary};
use uqbench::synthdata::{lrfd_at, sample_dataset};
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let spec = DatasetId::A.spec();
    let points = sample_dataset(&spec, 5000, 11)?;
    let truth: Vec<f64> = points.iter().map(|p| lrfd_at(p.coords(), &spec)).collect::<Result<_, _>>()?;
    let labels = points.iter().map(|p| p.label).collect::<Vec<_>>();

    for sharpen in [1.0, 2.0, 4.0] {
        // push each probability away from 0.5 in logit space
        let predicted: Vec<f64> = truth
            .iter()
            .map(|&p| {
                let z = (p / (1.0 - p)).ln() * sharpen;
                1.0 / (1.0 + (-z).exp())
            })
            .collect();
        let batch = EvaluationBatch::new(predicted, labels.clone(), truth.clone())?;
        let m = MetricSummary::compute(&batch);
        println!(
            "sharpen x{sharpen}: accuracy {:.4}  ECE {:.4} (5 bins {:.4})  log loss {:.4}  W1 {:.4}  KL {:.4}",
            m.accuracy,
            m.ece,
            ece(&batch, 5)?,
            m.log_loss,
            m.wasserstein1,
            m.mean_kl
        );
    }
    Ok(())
}
