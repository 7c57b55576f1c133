mod support;

use uqbench::gp::{laplace_fit, log_marginal_likelihood, RbfKernel};
use uqbench::synthdata::{coords_of, sample_dataset};
use uqbench::DatasetId;

fn problem(n: usize, seed: u64) -> (Vec<[f64; 2]>, Vec<f64>) {
    let data = sample_dataset(&DatasetId::B.spec(), n, seed).unwrap();
    let t = data.iter().map(|p| if p.label.is_two() { 1.0 } else { 0.0 }).collect();
    (coords_of(&data), t)
}

#[test]
fn mode_and_latent_match_dense_oracle() {
    for (seed, kernel) in [(1, RbfKernel { length_scale: 5.0, output_std: 1.5 }), (2, RbfKernel { length_scale: 12.0, output_std: 0.7 })] {
        let (x, t) = problem(30, seed);
        let fit = laplace_fit(&x, &t, kernel).unwrap();
        let oracle = support::dense_gp::fit(&x, &t, kernel.length_scale, kernel.output_std);
        for (a, b) in fit.mode.iter().zip(&oracle.mode) {
            assert!((a - b).abs() < 1e-9, "mode {a} vs {b}");
        }
        let query: Vec<[f64; 2]> = (0..15).map(|i| [i as f64 * 3.0 - 20.0, 7.0 - i as f64]).collect();
        for (q, l) in query.iter().zip(fit.latent(&query).unwrap()) {
            let (m, v) = oracle.predict(*q);
            assert!((l.mean - m).abs() < 1e-8, "mean {} vs {m}", l.mean);
            assert!((l.variance - v).abs() < 1e-8, "variance {} vs {v}", l.variance);
        }
    }
}

#[test]
fn far_points_revert_to_the_prior() {
    let (x, t) = problem(40, 3);
    let kernel = RbfKernel { length_scale: 8.0, output_std: 2.0 };
    let fit = laplace_fit(&x, &t, kernel).unwrap();
    let far = fit.latent(&[[1000.0, 1000.0]]).unwrap()[0];
    assert!(far.mean.abs() < 1e-12);
    assert!((far.variance - 4.0).abs() < 1e-12);
}

#[test]
fn log_marginal_matches_dense_oracle() {
    for (seed, l, s) in [(4, 8.0, 1.0), (5, 2.0, 3.0), (6, 30.0, 0.5)] {
        let (x, t) = problem(30, seed);
        let ours = log_marginal_likelihood(&x, &t, RbfKernel { length_scale: l, output_std: s });
        let oracle = support::dense_gp::fit(&x, &t, l, s).log_marginal(&t);
        assert!((ours - oracle).abs() < 1e-8, "{ours} vs {oracle}");
    }
}
