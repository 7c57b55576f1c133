//! Train a classifier, save it as a fingerprinted checkpoint, reload it and
//! confirm the reloaded model predicts identically.

use std::time::Instant;

use uqbench::classifiers::Algorithm;
use uqbench::harness::{generate_splits, load_checkpoint, save_checkpoint, CheckpointHeader, ExperimentConfig, TrainedModel};
use uqbench::synthdata::coords_of;
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let mut cfg = ExperimentConfig::default().fast();
    cfg.splits.train = 300;
    cfg.splits.validation = 100;
    cfg.splits.test = 500;
    let splits = generate_splits(&cfg, DatasetId::A)?;

    let mut model = TrainedModel::build(Algorithm::Dpmm, &cfg);
    let started = Instant::now();
    let report = model.classifier_mut().fit(&splits.train, &splits.validation, 21)?;
    let header = CheckpointHeader::new(
        Algorithm::Dpmm,
        &cfg,
        splits.id,
        splits.manifest().fingerprint,
        splits.train.len(),
        splits.train.len(),
        21,
        report,
        started.elapsed().as_secs_f64(),
    );

    let dir = std::env::temp_dir().join("uqbench-example-checkpoint");
    save_checkpoint(&dir, &header, &model)?;
    let (loaded_header, loaded) = load_checkpoint(&dir)?;
    println!("saved {} checkpoint, fingerprint {}", loaded_header.algorithm, loaded_header.fingerprint);

    let x = coords_of(&splits.test);
    let before = model.classifier().predict(&x)?;
    let after = loaded.classifier().predict(&x)?;
    println!("{} test predictions identical after reload: {}", x.len(), before == after);
    Ok(())
}
