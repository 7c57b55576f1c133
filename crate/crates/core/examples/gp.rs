//! Gaussian-process classification with the Laplace approximation: optimize
//! the RBF kernel on the marginal likelihood, then watch the prediction
//! revert to the prior far from the data.

use uqbench::classifiers::ProbabilisticClassifier;
use uqbench::gp::{class2_targets, laplace_fit, log_marginal_likelihood, GpClassifier, GpConfig, RbfKernel};
use uqbench::synthdata::{coords_of, lrfd, sample_dataset};
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let spec = DatasetId::A.spec();
    let train = sample_dataset(&spec, 400, 1)?;
    let validation = sample_dataset(&spec, 100, 2)?;
    let x = coords_of(&train);
    let t = class2_targets(&train);

    let initial = RbfKernel::initial();
    let fit = laplace_fit(&x, &t, initial)?;
    println!(
        "initial kernel l = {:.2}, σ_o = {:.3}: log marginal {:.3}, {} Newton steps",
        initial.length_scale,
        initial.output_std,
        log_marginal_likelihood(&x, &t, initial),
        fit.newton_iterations
    );

    let mut gp = GpClassifier::new(GpConfig { restarts: 2, ..GpConfig::default() });
    gp.fit(&train, &validation, 3)?;
    let probes: Vec<[f64; 2]> = [1.0, 10.0, 30.0, 100.0, 700.0].iter().map(|&r| [0.0, r]).collect();
    let latent = gp.latent(&probes)?;
    for ((p, f), e) in probes.iter().zip(&latent).zip(gp.predict(&probes)?) {
        println!(
            "r = {:>5}: latent {:+.3} ± {:.3}, p = {:.3} ± {:.3} (exact {:.3})",
            p[1],
            f.mean,
            f.std_dev(),
            e.mean,
            e.uncertainty,
            lrfd(p[1], &spec)?
        );
    }
    Ok(())
}
