use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use talc_core::baselines::{majority_vote, MvFallback};
use talc_core::model::oracle::MAX_CONFIGURATIONS;
use talc_core::model::{
    brute_force_oracle, fit_em, gibbs_map, gradient, map_exact, marginal_log_likelihood, posterior,
    FitOptions, GibbsOptions, ModelWeights,
};
use talc_core::{LabelSpace, LabelingMatrix, ABSTAIN};

fn random_matrix(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    k: usize,
    abstain: f64,
) -> LabelingMatrix {
    let rows: Vec<Vec<i32>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    if rng.gen::<f64>() < abstain {
                        ABSTAIN
                    } else {
                        rng.gen_range(0..k as i32)
                    }
                })
                .collect()
        })
        .collect();
    LabelingMatrix::from_rows(&rows, LabelSpace::with_k(k).unwrap()).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, m: usize, k: usize, lambda: f64) -> ModelWeights {
    ModelWeights {
        accuracy: (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        propensity: (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        class_log_prior: vec![0.0; k],
        l2_lambda: lambda,
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn closed_forms_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 50 {
        let (n, m, k) = (
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(2..=3),
        );
        let size = ((k + 1) as f64).powi((n * m) as i32) * (k as f64).powi(n as i32);
        if size > MAX_CONFIGURATIONS {
            continue;
        }
        let mat = random_matrix(&mut rng, n, m, k, 0.3);
        let w = random_weights(&mut rng, m, k, 0.0);
        let oracle = brute_force_oracle(&mat, &w).unwrap();
        let post = posterior(&mat, &w).unwrap();
        for (a, b) in post
            .rows
            .iter()
            .flatten()
            .zip(oracle.posterior.iter().flatten())
        {
            assert!(rel_close(*a, *b, 1e-9), "posterior {a} vs {b}");
        }
        let ll = marginal_log_likelihood(&mat, &w).unwrap();
        assert!(rel_close(ll, oracle.marginal_log_likelihood, 1e-9));
        let labels: Vec<usize> = map_exact(&mat, &w)
            .unwrap()
            .iter()
            .map(|p| p.label)
            .collect();
        assert_eq!(labels, oracle.map);
        done += 1;
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..20 {
        let (n, m, k) = (
            rng.gen_range(2..=12),
            rng.gen_range(1..=5),
            rng.gen_range(2..=4),
        );
        let mat = random_matrix(&mut rng, n, m, k, 0.3);
        let w = random_weights(&mut rng, m, k, 1e-2);
        let g = gradient(&mat, &w).unwrap().flat();
        let flat = w.flat();
        for (idx, &gi) in g.iter().enumerate() {
            let mut up = flat.clone();
            let mut down = flat.clone();
            up[idx] += h;
            down[idx] -= h;
            let fd = (marginal_log_likelihood(&mat, &w.with_flat(&up)).unwrap()
                - marginal_log_likelihood(&mat, &w.with_flat(&down)).unwrap())
                / (2.0 * h);
            let scale = gi.abs().max(fd.abs()).max(1.0);
            assert!(
                (gi - fd).abs() <= 1e-5 * scale,
                "component {idx}: {gi} vs {fd}"
            );
        }
    }
}

#[test]
fn equal_weights_reduce_to_majority_vote() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (n, m, k) = (
            rng.gen_range(1..=30),
            rng.gen_range(1..=7),
            rng.gen_range(2..=4),
        );
        let mat = random_matrix(&mut rng, n, m, k, 0.0);
        let a = rng.gen_range(0.1..3.0);
        let w = ModelWeights {
            accuracy: vec![a; m],
            propensity: (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            class_log_prior: vec![0.0; k],
            l2_lambda: 0.0,
        };
        let exact = map_exact(&mat, &w).unwrap();
        let mv = majority_vote(&mat, MvFallback::FixedClass0).predictions;
        for (e, v) in exact.iter().zip(&mv) {
            assert_eq!((e.label, e.tie), (v.label, v.tie));
        }
    }
}

#[test]
fn fitting_is_deterministic_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mat = random_matrix(&mut rng, 200, 5, 3, 0.25);
    let a = fit_em(&mat, &FitOptions::default()).unwrap();
    let b = fit_em(&mat, &FitOptions::default()).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert!(a
        .log_likelihood_trace
        .windows(2)
        .all(|p| p[1] >= p[0] - 1e-9));
}

#[test]
fn gibbs_agrees_with_exact_on_confident_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mat = random_matrix(&mut rng, 300, 6, 2, 0.2);
    let w = random_weights(&mut rng, 6, 2, 0.0);
    let exact = map_exact(&mat, &w).unwrap();
    let g = gibbs_map(
        &mat,
        &w,
        &GibbsOptions {
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    for (e, s) in exact.iter().zip(&g) {
        let mut p = e.posterior.clone();
        p.sort_by(|a, b| b.total_cmp(a));
        if p[0] - p[1] > 0.2 {
            assert_eq!(e.label, s.label);
        }
    }
}

fn small_instance() -> impl Strategy<Value = (LabelingMatrix, ModelWeights)> {
    (1usize..20, 1usize..6, 2usize..5, any::<u64>()).prop_map(|(n, m, k, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mat = random_matrix(&mut rng, n, m, k, 0.3);
        let w = random_weights(&mut rng, m, k, 1e-4);
        (mat, w)
    })
}

proptest! {
    #[test]
    fn posterior_ignores_propensity((mat, w) in small_instance(), j in 0usize..6, delta in -5.0f64..5.0) {
        let j = j % w.m();
        let mut w2 = w.clone();
        w2.propensity[j] += delta;
        prop_assert_eq!(posterior(&mat, &w).unwrap(), posterior(&mat, &w2).unwrap());
    }

    #[test]
    fn likelihood_is_bounded_and_posteriors_normalized((mat, w) in small_instance()) {
        prop_assert!(marginal_log_likelihood(&mat, &w).unwrap() <= 1e-9);
        for row in posterior(&mat, &w).unwrap().rows {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_factorizes_per_row((mat, w) in small_instance(), i in 0usize..20) {
        let i = i % mat.n();
        let single = mat.select_rows(&[i]).unwrap();
        let whole = posterior(&mat, &w).unwrap();
        prop_assert_eq!(&posterior(&single, &w).unwrap().rows[0], &whole.rows[i]);
    }

    #[test]
    fn column_permutation_permutes_weights(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mat = random_matrix(&mut rng, 40, 4, 2, 0.2);
        let perm = [2usize, 0, 3, 1];
        let permuted = mat.select_columns(&perm).unwrap();
        let opts = FitOptions { max_iters: 50, ..FitOptions::default() };
        let a = fit_em(&mat, &opts).unwrap().final_weights;
        let b = fit_em(&permuted, &opts).unwrap().final_weights;
        for (pos, &src) in perm.iter().enumerate() {
            prop_assert!((a.accuracy[src] - b.accuracy[pos]).abs() < 1e-9);
        }
    }
}
