//! Evidential deep learning and Monte Carlo dropout on dataset B: each picks
//! its best candidate network by validation loss and reports a per-point
//! uncertainty alongside the class-2 probability.

use uqbench::classifiers::edl::EdlClassifier;
use uqbench::classifiers::mcd::McdClassifier;
use uqbench::classifiers::{NeuralConfig, ProbabilisticClassifier};
use uqbench::synthdata::{lrfd, sample_dataset};
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let spec = DatasetId::B.spec();
    let train = sample_dataset(&spec, 1000, 1)?;
    let validation = sample_dataset(&spec, 500, 2)?;
    let neural = NeuralConfig::default();

    let mut edl = EdlClassifier::new(neural, 0.002, 8);
    let mut mcd = McdClassifier::new(neural, 0.3, 8, 200);
    let models: [&mut dyn ProbabilisticClassifier; 2] = [&mut edl, &mut mcd];

    let radii = [2.0, 8.0, 20.0, 60.0, 1000.0];
    let probes: Vec<[f64; 2]> = radii.iter().map(|&r| [r, 0.0]).collect();
    for model in models {
        let report = model.fit(&train, &validation, 5)?;
        println!("{} (best validation loss {:.4})", model.algorithm(), report.validation_loss.unwrap_or(f64::NAN));
        for (r, e) in radii.iter().zip(model.predict(&probes)?) {
            println!("  r = {r:>6}: p = {:.3} ± {:.3}  (exact {:.3})", e.mean, e.uncertainty, lrfd(*r, &spec)?);
        }
    }
    Ok(())
}
