use debayes::data::{CoefficientVector, Dataset};
use debayes::debias::{debias_draw, draw_weight, WeightVector};
use debayes::lasso::{fit_lasso, LassoConfig};
use debayes::precision::{default_nodewise_penalties, nodewise_lasso};
use debayes::rng::stream;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = stream(seed, &[]);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |i, _| x[(i, 0)] + rng.sample::<f64, _>(StandardNormal));
    Dataset::new(x, y).unwrap()
}

fn with_perm(n: std::ops::Range<usize>) -> impl Strategy<Value = (usize, Vec<usize>)> {
    n.prop_flat_map(|n| (Just(n), Just((0..n).collect::<Vec<_>>()).prop_shuffle()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lasso_ignores_row_order((n, perm) in with_perm(5..40), p in 1usize..6, seed in any::<u64>(), lambda in 0.01f64..1.0) {
        let d = random_data(n, p, seed);
        let cfg = LassoConfig::new(lambda).with_tolerance(1e-12);
        let a = fit_lasso(&d, &cfg).unwrap().coefficients;
        let b = fit_lasso(&d.permute_rows(&perm).unwrap(), &cfg).unwrap().coefficients;
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn debiasing_follows_weights_through_row_permutations(
        (n, perm) in with_perm(10..40), p in 2usize..6, seed in any::<u64>(), b in 0usize..100,
    ) {
        let d = random_data(n, p, seed);
        let pd = d.permute_rows(&perm).unwrap();
        let theta = nodewise_lasso(&d, &default_nodewise_penalties(n, p, 1.0).unwrap()).unwrap();
        let w = draw_weight(n, seed, b);
        let pw = WeightVector::new(DVector::from_fn(n, |i, _| w.as_slice()[perm[i]])).unwrap();
        let beta = CoefficientVector(DVector::from_fn(p, |j, _| j as f64 * 0.3 - 0.5));
        let a = debias_draw(&beta, &w, &theta, &d).unwrap();
        let c = debias_draw(&beta, &pw, &theta, &pd).unwrap();
        for (x, y) in a.as_slice().iter().zip(c.as_slice()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn weights_are_positive_and_sum_to_one(n in 1usize..200, seed in any::<u64>(), b in any::<usize>()) {
        let w = draw_weight(n, seed, b);
        prop_assert!(w.as_slice().iter().all(|v| *v > 0.0));
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_draw_debiases_to_a_weighted_score(n in 10usize..40, p in 2usize..5, seed in any::<u64>()) {
        let d = random_data(n, p, seed);
        let theta = nodewise_lasso(&d, &default_nodewise_penalties(n, p, 1.0).unwrap()).unwrap();
        let w = draw_weight(n, seed, 0);
        let out = debias_draw(&CoefficientVector::zeros(p), &w, &theta, &d).unwrap();
        let score = d.design().tr_mul(&d.response().component_mul(w.as_vector()));
        let expected = &theta.theta * score;
        for (x, y) in out.as_slice().iter().zip(expected.iter()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}
