use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::{check_dims, class_scores, row_posterior};
use super::weights::ModelWeights;
use crate::data::{argmax_lowest, LabelingMatrix};
use crate::error::{Result, TalcError};
use crate::predictions::Prediction;

/// Exact MAP labels. The model factorizes over examples, so the joint
/// argmax is the per-example argmax of the class scores.
pub fn map_exact(matrix: &LabelingMatrix, w: &ModelWeights) -> Result<Vec<Prediction>> {
    check_dims(matrix, w)?;
    Ok(matrix
        .example_ids()
        .iter()
        .zip(matrix.rows())
        .map(|(id, row)| {
            let (label, tie) = argmax_lowest(&class_scores(row, w));
            Prediction {
                example_id: id.clone(),
                label,
                tie,
                posterior: row_posterior(row, w),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsOptions {
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions {
            burn_in: 100,
            samples: 500,
            seed: 0,
        }
    }
}

/// MAP labels by Gibbs sampling: each sweep resamples every `Y_i` from its
/// full conditional, which under this model is the example's own posterior.
/// The label is the mode of the retained samples; the reported posterior is
/// the empirical sample frequency.
pub fn gibbs_map(
    matrix: &LabelingMatrix,
    w: &ModelWeights,
    opts: &GibbsOptions,
) -> Result<Vec<Prediction>> {
    check_dims(matrix, w)?;
    if opts.samples == 0 {
        return Err(TalcError::Config("gibbs samples must be >= 1".into()));
    }
    let k = matrix.k();
    let conditionals: Vec<Vec<f64>> = matrix.rows().map(|r| row_posterior(r, w)).collect();
    let mut counts = vec![vec![0usize; k]; matrix.n()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for sweep in 0..opts.burn_in + opts.samples {
        let keep = sweep >= opts.burn_in;
        for (q, c) in conditionals.iter().zip(counts.iter_mut()) {
            let y = sample_categorical(q, rng.gen::<f64>());
            if keep {
                c[y] += 1;
            }
        }
    }
    Ok(matrix
        .example_ids()
        .iter()
        .zip(counts)
        .map(|(id, c)| {
            let freq: Vec<f64> = c.iter().map(|&v| v as f64 / opts.samples as f64).collect();
            let (label, tie) = argmax_lowest(&freq);
            Prediction {
                example_id: id.clone(),
                label,
                tie,
                posterior: freq,
            }
        })
        .collect())
}

fn sample_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (c, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return c;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabelSpace, ABSTAIN};

    fn matrix(rows: &[Vec<i32>], k: usize) -> LabelingMatrix {
        LabelingMatrix::from_rows(rows, LabelSpace::with_k(k).unwrap()).unwrap()
    }

    fn equal(m: usize, k: usize, a: f64) -> ModelWeights {
        let mut w = ModelWeights::zeros(m, k);
        w.accuracy = vec![a; m];
        w
    }

    #[test]
    fn plurality_under_equal_weights() {
        let p = map_exact(&matrix(&[vec![0, 0, 1]], 2), &equal(3, 2, 0.8)).unwrap();
        assert_eq!((p[0].label, p[0].tie), (0, false));
    }

    #[test]
    fn all_abstain_row_ties_to_class_zero() {
        let p = map_exact(&matrix(&[vec![ABSTAIN, ABSTAIN]], 3), &equal(2, 3, 1.0)).unwrap();
        assert_eq!((p[0].label, p[0].tie), (0, true));
    }

    #[test]
    fn gibbs_is_deterministic_and_valid() {
        let m = matrix(&[vec![0, 1], vec![1, 1], vec![ABSTAIN, 0]], 2);
        let w = ModelWeights::zeros(2, 2);
        let opts = GibbsOptions {
            seed: 9,
            ..GibbsOptions::default()
        };
        let a = gibbs_map(&m, &w, &opts).unwrap();
        let b = gibbs_map(&m, &w, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.label < 2));
        assert!(gibbs_map(&m, &w, &GibbsOptions { samples: 0, ..opts }).is_err());
    }

    #[test]
    fn gibbs_follows_confident_posteriors() {
        let m = matrix(&[vec![0, 0, 0], vec![1, 1, ABSTAIN], vec![2, 2, 1]], 3);
        let w = equal(3, 3, 2.0);
        let exact = map_exact(&m, &w).unwrap();
        for seed in 1..4 {
            let g = gibbs_map(
                &m,
                &w,
                &GibbsOptions {
                    seed,
                    ..GibbsOptions::default()
                },
            )
            .unwrap();
            let labels: Vec<usize> = g.iter().map(|p| p.label).collect();
            assert_eq!(labels, exact.iter().map(|p| p.label).collect::<Vec<_>>());
        }
    }

    #[test]
    fn categorical_sampling_edges() {
        assert_eq!(sample_categorical(&[0.5, 0.5], 0.0), 0);
        assert_eq!(sample_categorical(&[0.5, 0.5], 0.75), 1);
        assert_eq!(
            sample_categorical(&[0.3, 0.7 - 1e-17, 0.0], 0.999999999999),
            1
        );
    }
}
