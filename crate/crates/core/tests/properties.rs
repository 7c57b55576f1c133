use proptest::prelude::*;

use uqbench::harness::nearest_rank;
use uqbench::metrics::{bernoulli_kl, ece, wasserstein1_samples, EvaluationBatch};
use uqbench::posterior::{beta_bernoulli_mean, mc_mean, mc_uncertainty, BetaBernoulliPosterior, PredictiveEstimate};
use uqbench::rng::derive_seed;
use uqbench::synthdata::{lrfd, GammaClassSpec};
use uqbench::{Class, DatasetId};

fn dataset() -> impl Strategy<Value = DatasetId> {
    prop_oneof![Just(DatasetId::A), Just(DatasetId::B), Just(DatasetId::C)]
}

fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, n)
}

proptest! {
    #[test]
    fn lrfd_is_a_probability(id in dataset(), r in 0.0..5000.0f64) {
        let p = lrfd(r, &id.spec()).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn swapping_classes_mirrors_lrfd(a1 in 1.0..8.0f64, e1 in 1.0..6.0f64, a2 in 1.0..8.0f64, e2 in 1.0..6.0f64, r in 0.01..200.0f64) {
        let spec = GammaClassSpec { alpha1: a1, eta1: e1, alpha2: a2, eta2: e2, prior1: 0.5, prior2: 0.5 };
        let swapped = GammaClassSpec { alpha1: a2, eta1: e2, alpha2: a1, eta2: e1, prior1: 0.5, prior2: 0.5 };
        let p = lrfd(r, &spec).unwrap();
        let q = lrfd(r, &swapped).unwrap();
        prop_assert!((p + q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stronger_priors_pull_toward_half(n in 1u64..200, frac in 0.0..1.0f64, c in 0.0..10.0f64, dc in 0.01..10.0f64) {
        let s = ((n as f64) * frac).floor() as u64;
        prop_assume!(2 * s != n);
        let m1 = beta_bernoulli_mean(&BetaBernoulliPosterior::new(n, s, c).unwrap()).unwrap();
        let m2 = beta_bernoulli_mean(&BetaBernoulliPosterior::new(n, s, c + dc).unwrap()).unwrap();
        prop_assert!((m2 - 0.5).abs() <= (m1 - 0.5).abs() + 1e-15);
    }

    #[test]
    fn draw_summaries_stay_in_range(draws in prop::collection::vec(0.0..=1.0f64, 1..300)) {
        let m = mc_mean(&draws).unwrap();
        let u = mc_uncertainty(&draws).unwrap();
        let lo = draws.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = draws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m >= lo - 1e-15 && m <= hi + 1e-15);
        prop_assert!((0.0..=0.5).contains(&u));
        prop_assert!(PredictiveEstimate::from_draws(&draws).is_ok());
    }

    #[test]
    fn wasserstein_is_a_metric((a, b, c) in (1usize..60).prop_flat_map(|n| (probs(n), probs(n), probs(n)))) {
        let ab = wasserstein1_samples(&a, &b).unwrap();
        let ba = wasserstein1_samples(&b, &a).unwrap();
        let ac = wasserstein1_samples(&a, &c).unwrap();
        let cb = wasserstein1_samples(&c, &b).unwrap();
        prop_assert!(wasserstein1_samples(&a, &a).unwrap() == 0.0);
        prop_assert!((ab - ba).abs() < 1e-15);
        prop_assert!(ab <= ac + cb + 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_the_diagonal(nu in 0.0..=1.0f64, p in 0.0..=1.0f64) {
        prop_assert!(bernoulli_kl(nu, p) >= -1e-15);
        prop_assert!(bernoulli_kl(p, p).abs() < 1e-8);
    }

    #[test]
    fn ece_is_bounded(pred in probs(50), flips in prop::collection::vec(any::<bool>(), 50), bins in 1usize..30) {
        let labels: Vec<Class> = flips.iter().map(|&f| if f { Class::Two } else { Class::One }).collect();
        let batch = EvaluationBatch::new(pred, labels, vec![0.5; 50]).unwrap();
        let e = ece(&batch, bins).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&e));
    }

    #[test]
    fn nearest_rank_returns_a_member(mut v in prop::collection::vec(-1e3..1e3f64, 1..100), p in 0.0..=100.0f64) {
        v.sort_by(f64::total_cmp);
        let q = nearest_rank(&v, p);
        prop_assert!(v.contains(&q));
        prop_assert!(nearest_rank(&v, 2.5) <= nearest_rank(&v, 97.5));
    }

    #[test]
    fn derived_seeds_depend_on_label(root in any::<u64>(), a in "[a-z/0-9]{1,12}", b in "[a-z/0-9]{1,12}") {
        prop_assume!(a != b);
        prop_assert_eq!(derive_seed(root, &a), derive_seed(root, &a));
        prop_assert_ne!(derive_seed(root, &a), derive_seed(root, &b));
    }
}
