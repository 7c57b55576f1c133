//! Run a small benchmark matrix and one grid cell through the harness, then
//! write the study directory and a report bundle.

use uqbench::classifiers::Algorithm;
use uqbench::harness::{build_report, generate_splits, grid_cells, run_grid_cell, run_study, write_study, ExperimentConfig};
use uqbench::nn::NetworkSize;
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let mut cfg = ExperimentConfig::default().fast();
    cfg.datasets = vec![DatasetId::A];
    cfg.algorithms = vec![Algorithm::Nne, Algorithm::Gp];
    cfg.train_sizes = vec![250];
    cfg.splits.train = 250;
    cfg.splits.validation = 250;
    cfg.splits.test = 2000;
    cfg.spatial_lattice = 11;
    cfg.neural.size = NetworkSize::Small;
    cfg.ensemble.members = 4;
    cfg.grid.members = 4;

    let out = std::env::temp_dir().join("uqbench-example-study");
    let study = run_study(&cfg)?;
    write_study(&out, &cfg, &study)?;
    for r in &study.records {
        println!(
            "{} {} N={}: accuracy {:.4} (Bayes {:.4}), W1 {:.4}, OOD p̄ {:.3}, OOD ū {:.3}",
            r.dataset, r.algorithm, r.n_train, r.accuracy, r.bayes_accuracy, r.wasserstein1, r.ood_mean_probability, r.ood_mean_uncertainty
        );
    }

    let splits = generate_splits(&cfg, DatasetId::A)?;
    let cells = grid_cells(Algorithm::Nne, &cfg)?;
    let cell = cells.iter().find(|c| c.n_train == 250 && c.size == NetworkSize::Small).expect("grid has small cells");
    let row = run_grid_cell(&cfg, &splits, cell)?;
    println!(
        "grid: {} cells for NNE; lr {} wd {}: validation accuracy {:.4} [{:.4}, {:.4}], poorly fitted: {}",
        cells.len(),
        cell.learning_rate,
        cell.weight_decay,
        row.val_accuracy,
        row.val_accuracy_p2_5,
        row.val_accuracy_p97_5,
        row.poorly_fitted
    );

    let bundle = build_report(std::slice::from_ref(&out), &out.join("bundle"))?;
    println!("{} records bundled under {}", bundle.records, out.join("bundle").display());
    Ok(())
}
