//! Train a plain neural ensemble and a conflictual-loss ensemble on dataset A
//! and compare their estimates inside the data and far outside it.

use uqbench::classifiers::ensemble::EnsembleClassifier;
use uqbench::classifiers::{NeuralConfig, ProbabilisticClassifier};
use uqbench::metrics::{EvaluationBatch, MetricSummary};
use uqbench::synthdata::{coords_of, lrfd_at, sample_dataset};
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let spec = DatasetId::A.spec();
    let train = sample_dataset(&spec, 1000, 1)?;
    let validation = sample_dataset(&spec, 500, 2)?;
    let test = sample_dataset(&spec, 2000, 3)?;
    let truth: Vec<f64> = test.iter().map(|p| lrfd_at(p.coords(), &spec)).collect::<Result<_, _>>()?;
    let labels: Vec<_> = test.iter().map(|p| p.label).collect();

    let neural = NeuralConfig::default();
    let mut models = [
        EnsembleClassifier::nne(neural, 6),
        EnsembleClassifier::conflictual(neural, 6, 0.1),
    ];
    for model in &mut models {
        let report = model.fit(&train, &validation, 7)?;
        let estimates = model.predict(&coords_of(&test))?;
        let batch = EvaluationBatch::new(estimates.iter().map(|e| e.mean).collect(), labels.clone(), truth.clone())?;
        let m = MetricSummary::compute(&batch);
        let far = model.predict(&[[700.0, 0.0], [0.0, -1000.0]])?;
        println!(
            "{}: {} members, accuracy {:.4}, W1 {:.4}; far points p = {:.3}/{:.3}, u = {:.3}/{:.3}",
            model.algorithm(),
            report.units_trained,
            m.accuracy,
            m.wasserstein1,
            far[0].mean,
            far[1].mean,
            far[0].uncertainty,
            far[1].uncertainty
        );
    }
    Ok(())
}
