//! Sample the three radial datasets and compare the empirical Bayes accuracy
//! with the exact class probability along a few radii.

use uqbench::synthdata::{bayes_classify, lrfd, make_ood_grid, DatasetSplits, SplitSizes};
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let sizes = SplitSizes { train: 2000, validation: 500, test: 20_000 };
    for id in [DatasetId::A, DatasetId::B, DatasetId::C] {
        let spec = id.spec();
        let splits = DatasetSplits::generate(id, 1, sizes)?;
        let mut correct = 0;
        for p in &splits.test {
            if bayes_classify(p.coords(), &spec)? == p.label {
                correct += 1;
            }
        }
        println!(
            "dataset {id}: fingerprint {}, Bayes accuracy on test {:.4}",
            splits.manifest().fingerprint,
            correct as f64 / splits.test.len() as f64
        );
        for r in [1.0, 5.0, 10.0, 20.0, 40.0] {
            println!("  P(class 2 | r = {r:>4}) = {:.6}", lrfd(r, &spec)?);
        }
    }

    let grid = make_ood_grid();
    let far = lrfd(grid.radii[grid.radii.len() - 1], &DatasetId::A.spec())?;
    println!("OOD grid: {} points, dataset A class-2 probability at r = 1000 is {far:.6}", grid.len());
    Ok(())
}
