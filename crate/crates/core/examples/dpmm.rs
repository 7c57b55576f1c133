//! Fit the truncated Dirichlet-process mixture by blocked Gibbs sampling and
//! inspect the per-draw class conditionals behind each prediction.

use uqbench::dpmm::{dpmm_conditional, gibbs_fit, DpmmConfig, McmcBudget};
use uqbench::synthdata::{lrfd, sample_dataset};
use uqbench::DatasetId;

fn main() -> uqbench::Result<()> {
    let spec = DatasetId::A.spec();
    let train = sample_dataset(&spec, 500, 1)?;
    let cfg = DpmmConfig { budget: McmcBudget::fast(), ..DpmmConfig::default() };
    let draws = gibbs_fit(&train, &cfg, 9)?;
    println!("{} posterior draws, truncation {}", draws.len(), cfg.truncation);

    for r in [2.0, 10.0, 30.0, 800.0] {
        let x = [r / 2f64.sqrt(), r / 2f64.sqrt()];
        let p: Vec<f64> = draws.draws.iter().map(|d| dpmm_conditional(d, x).class2).collect();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        let sd = (p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / p.len() as f64).sqrt();
        println!(
            "r = {r:>5}: p = {mean:.3} ± {sd:.3} (exact {:.3}), feature density {:.3e}",
            lrfd(r, &spec)?,
            draws.predictive_density(x)
        );
    }
    Ok(())
}
