//! Brute-force reference for small instances.
//!
//! Nothing here uses the factorized formulas: every quantity is obtained by
//! enumerating label configurations `Y` (and, for the normalizer, every
//! pseudo-label matrix `M'` as well) and summing `exp(wᵀφ(M, Y))` built
//! directly from the accuracy and propensity indicators.

use super::weights::ModelWeights;
use crate::data::{LabelingMatrix, ABSTAIN};
use crate::error::{Result, TalcError};

/// Upper bound on `(k+1)^(n·m) · k^n`.
pub const MAX_CONFIGURATIONS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub posterior: Vec<Vec<f64>>,
    pub log_partition: f64,
    pub marginal_log_likelihood: f64,
    /// Joint argmax of `P(Y | M)`, ties broken toward the lexicographically smallest `Y`.
    pub map: Vec<usize>,
}

fn features_dot(cells: &[i32], labels: &[usize], m: usize, w: &ModelWeights) -> f64 {
    let mut s = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        s += w.class_log_prior[y];
        for j in 0..m {
            let c = cells[i * m + j];
            let acc = if c != ABSTAIN && c as usize == y {
                1.0
            } else {
                0.0
            };
            let prop = if c != ABSTAIN { 1.0 } else { 0.0 };
            s += w.accuracy[j] * acc + w.propensity[j] * prop;
        }
    }
    s
}

/// Odometer over `digits` positions with values `0..base`.
fn next_config(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn lse(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

pub fn brute_force_oracle(matrix: &LabelingMatrix, w: &ModelWeights) -> Result<OracleResult> {
    let (n, m, k) = (matrix.n(), matrix.m(), matrix.k());
    if w.accuracy.len() != m || w.propensity.len() != m || w.class_log_prior.len() != k {
        return Err(TalcError::Dimension(
            "oracle weights do not match matrix".into(),
        ));
    }
    let size = ((k + 1) as f64).powi((n * m) as i32) * (k as f64).powi(n as i32);
    if size > MAX_CONFIGURATIONS {
        return Err(TalcError::TooLarge(size));
    }

    // Observed M, all Y.
    let mut labels = vec![0usize; n];
    let mut y_terms = Vec::new();
    let mut y_configs = Vec::new();
    loop {
        y_terms.push(features_dot(matrix.cells(), &labels, m, w));
        y_configs.push(labels.clone());
        if !next_config(&mut labels, k) {
            break;
        }
    }
    let log_evidence = lse(&y_terms);
    let mut posterior = vec![vec![0.0; k]; n];
    for (t, ys) in y_terms.iter().zip(&y_configs) {
        let p = (t - log_evidence).exp();
        for (i, &y) in ys.iter().enumerate() {
            posterior[i][y] += p;
        }
    }
    let mut best = 0;
    for (idx, t) in y_terms.iter().enumerate() {
        if *t > y_terms[best] {
            best = idx;
        }
    }
    let map = y_configs[best].clone();

    // All M' (cells in {abstain, 0..k}) and all Y.
    let mut cell_digits = vec![0usize; n * m];
    let mut all_terms = Vec::with_capacity(size as usize);
    loop {
        let cells: Vec<i32> = cell_digits.iter().map(|&d| d as i32 - 1).collect();
        let mut ys = vec![0usize; n];
        loop {
            all_terms.push(features_dot(&cells, &ys, m, w));
            if !next_config(&mut ys, k) {
                break;
            }
        }
        if !next_config(&mut cell_digits, k + 1) {
            break;
        }
    }
    let log_partition = lse(&all_terms);

    Ok(OracleResult {
        posterior,
        log_partition,
        marginal_log_likelihood: log_evidence - log_partition - w.l2_lambda * w.squared_norm(),
        map,
    })
}
