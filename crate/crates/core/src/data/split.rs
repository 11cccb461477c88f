use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::LabelingMatrix;
use crate::error::{Result, TalcError};

/// How much of the test set is used to fit the aggregator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationConfig {
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub shuffle_before_split: bool,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig {
            alpha: 1.0,
            seed: 0,
            shuffle_before_split: false,
        }
    }
}

impl AdaptationConfig {
    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        let cfg = AdaptationConfig {
            alpha,
            seed,
            shuffle_before_split: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(TalcError::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// `floor(alpha * n)`. The 1e-9 slack keeps products such as
    /// `0.29 * 100 = 28.999999999999996` on the intended integer.
    pub fn adaptation_size(&self, n: usize) -> usize {
        ((self.alpha * n as f64 + 1e-9).floor() as usize).min(n)
    }
}

/// Result of [`split_by_alpha`]. Row indices refer to the original matrix.
#[derive(Debug, Clone)]
pub struct Split {
    pub adaptation: LabelingMatrix,
    pub held_out: Option<LabelingMatrix>,
    pub adaptation_rows: Vec<usize>,
    pub held_out_rows: Vec<usize>,
}

/// Prefix split: the first `floor(alpha * n)` rows (after an optional
/// seeded permutation) form the adaptation set, the rest are held out.
pub fn split_by_alpha(matrix: &LabelingMatrix, config: &AdaptationConfig) -> Result<Split> {
    config.validate()?;
    let n = matrix.n();
    let n_adapt = config.adaptation_size(n);
    if n_adapt == 0 {
        return Err(TalcError::EmptyAdaptationSet {
            alpha: config.alpha,
            n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if config.shuffle_before_split {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        order.shuffle(&mut rng);
    }
    let held_out_rows = order.split_off(n_adapt);
    let adaptation_rows = order;
    let adaptation = matrix.select_rows(&adaptation_rows)?;
    let held_out = if held_out_rows.is_empty() {
        None
    } else {
        Some(matrix.select_rows(&held_out_rows)?)
    };
    Ok(Split {
        adaptation,
        held_out,
        adaptation_rows,
        held_out_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelSpace;
    use proptest::prelude::*;

    fn matrix(n: usize) -> LabelingMatrix {
        let rows: Vec<Vec<i32>> = (0..n).map(|i| vec![(i % 2) as i32]).collect();
        LabelingMatrix::from_rows(&rows, LabelSpace::with_k(2).unwrap()).unwrap()
    }

    #[test]
    fn prefix_split_without_shuffle() {
        let s = split_by_alpha(&matrix(10), &AdaptationConfig::new(0.5, 0).unwrap()).unwrap();
        assert_eq!(s.adaptation_rows, vec![0, 1, 2, 3, 4]);
        assert_eq!(s.held_out_rows, vec![5, 6, 7, 8, 9]);
        assert_eq!(s.adaptation.example_ids()[0], "x0");
    }

    #[test]
    fn alpha_one_holds_nothing_out() {
        let m = matrix(7);
        let s = split_by_alpha(&m, &AdaptationConfig::new(1.0, 0).unwrap()).unwrap();
        assert!(s.held_out.is_none());
        assert_eq!(s.adaptation, m);
    }

    #[test]
    fn empty_adaptation_set_is_an_error() {
        let err = split_by_alpha(&matrix(10), &AdaptationConfig::new(0.05, 0).unwrap());
        assert!(matches!(err, Err(TalcError::EmptyAdaptationSet { .. })));
        assert!(AdaptationConfig::new(1.5, 0).is_err());
    }

    #[test]
    fn seeded_shuffle_is_deterministic() {
        let cfg = AdaptationConfig {
            alpha: 0.3,
            seed: 42,
            shuffle_before_split: true,
        };
        let a = split_by_alpha(&matrix(50), &cfg).unwrap();
        let b = split_by_alpha(&matrix(50), &cfg).unwrap();
        assert_eq!(a.adaptation_rows, b.adaptation_rows);
        assert_ne!(a.adaptation_rows, (0..15).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn split_partitions_rows(n in 1usize..60, alpha in 0.0f64..=1.0, seed: u64, shuffle: bool) {
            let cfg = AdaptationConfig { alpha, seed, shuffle_before_split: shuffle };
            match split_by_alpha(&matrix(n), &cfg) {
                Ok(s) => {
                    prop_assert_eq!(s.adaptation_rows.len() + s.held_out_rows.len(), n);
                    let mut all: Vec<usize> = s.adaptation_rows.iter().chain(&s.held_out_rows).copied().collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                }
                Err(_) => prop_assert_eq!(cfg.adaptation_size(n), 0),
            }
        }
    }
}
