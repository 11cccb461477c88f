//! Closed-form quantities of the accuracy/propensity factor model.
//!
//! The joint over pseudo-labels `M` and latent labels `Y` is
//! `P(M, Y) ∝ exp(Σ_i prior[y_i] + Σ_ij acc_j·[M_ij = y_i] + prop_j·[M_ij ≠ abstain])`.
//! Every factor touches a single example, so the joint factorizes over rows
//! and each cell of the normalizer sums over three outcomes: agree with
//! `y`, disagree (k - 1 ways), or abstain.

use super::math::{log_sum_exp, softmax_in_place};
use super::weights::ModelWeights;
use crate::data::{LabelingMatrix, ABSTAIN};
use crate::error::{Result, TalcError};

/// Per-example posterior over the k classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub rows: Vec<Vec<f64>>,
}

/// Gradient of the marginal log-likelihood, split by weight family.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub accuracy: Vec<f64>,
    pub propensity: Vec<f64>,
}

impl Gradient {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.accuracy.clone();
        v.extend_from_slice(&self.propensity);
        v
    }

    pub fn norm(&self) -> f64 {
        self.accuracy
            .iter()
            .chain(&self.propensity)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn check_dims(matrix: &LabelingMatrix, w: &ModelWeights) -> Result<()> {
    if w.accuracy.len() != matrix.m() || w.propensity.len() != matrix.m() {
        return Err(TalcError::Dimension(format!(
            "{} columns but {} accuracy / {} propensity weights",
            matrix.m(),
            w.accuracy.len(),
            w.propensity.len()
        )));
    }
    if w.class_log_prior.len() != matrix.k() {
        return Err(TalcError::Dimension(format!(
            "k = {} but prior has {} entries",
            matrix.k(),
            w.class_log_prior.len()
        )));
    }
    Ok(())
}

/// Unnormalized log joint of one example with label `y`.
pub fn score(row: &[i32], y: usize, w: &ModelWeights) -> f64 {
    let mut s = w.class_log_prior[y];
    for (j, &c) in row.iter().enumerate() {
        if c == ABSTAIN {
            continue;
        }
        if c as usize == y {
            s += w.accuracy[j];
        }
        s += w.propensity[j];
    }
    s
}

/// The label-dependent part of [`score`] for every class. Propensity terms
/// are constant in `y` and left out, so the result does not depend on them.
pub fn class_scores(row: &[i32], w: &ModelWeights) -> Vec<f64> {
    let mut s = w.class_log_prior.clone();
    for (j, &c) in row.iter().enumerate() {
        if c != ABSTAIN {
            s[c as usize] += w.accuracy[j];
        }
    }
    s
}

/// Sum of the propensity weights of the columns that fired on this row.
fn propensity_total(row: &[i32], w: &ModelWeights) -> f64 {
    row.iter()
        .zip(&w.propensity)
        .filter(|(&c, _)| c != ABSTAIN)
        .map(|(_, &p)| p)
        .sum()
}

pub(crate) fn row_posterior(row: &[i32], w: &ModelWeights) -> Vec<f64> {
    let mut s = class_scores(row, w);
    softmax_in_place(&mut s);
    s
}

pub fn posterior(matrix: &LabelingMatrix, w: &ModelWeights) -> Result<Posterior> {
    check_dims(matrix, w)?;
    Ok(Posterior {
        rows: matrix.rows().map(|r| row_posterior(r, w)).collect(),
    })
}

/// `log Σ_{M in cell outcomes} exp(...)` for one cell given its label:
/// `log(e^{acc+prop} + (k-1)·e^{prop} + 1)`.
fn cell_log_normalizer(acc: f64, prop: f64, k: usize) -> f64 {
    log_sum_exp(&[acc + prop, ((k - 1) as f64).ln() + prop, 0.0])
}

/// Model probabilities that a cell agrees with the latent label, and that it fires at all.
fn cell_expectations(acc: f64, prop: f64, k: usize) -> (f64, f64) {
    let z = cell_log_normalizer(acc, prop, k);
    let agree = (acc + prop - z).exp();
    let disagree = (((k - 1) as f64).ln() + prop - z).exp();
    (agree, agree + disagree)
}

/// Log of the normalizer of the joint over all `(M, Y)` with `n` examples.
pub fn log_partition(w: &ModelWeights, n: usize, k: usize) -> f64 {
    let per_example = log_sum_exp(&w.class_log_prior)
        + w.accuracy
            .iter()
            .zip(&w.propensity)
            .map(|(&a, &p)| cell_log_normalizer(a, p, k))
            .sum::<f64>();
    n as f64 * per_example
}

/// Penalized marginal log-likelihood of the observed matrix.
pub fn marginal_log_likelihood(matrix: &LabelingMatrix, w: &ModelWeights) -> Result<f64> {
    check_dims(matrix, w)?;
    let observed: f64 = matrix
        .rows()
        .map(|r| log_sum_exp(&class_scores(r, w)) + propensity_total(r, w))
        .sum();
    Ok(observed - log_partition(w, matrix.n(), matrix.k()) - w.l2_lambda * w.squared_norm())
}

pub fn gradient(matrix: &LabelingMatrix, w: &ModelWeights) -> Result<Gradient> {
    check_dims(matrix, w)?;
    let m = matrix.m();
    let k = matrix.k();
    let n = matrix.n() as f64;
    let mut agree = vec![0.0; m];
    let mut fired = vec![0.0; m];
    for row in matrix.rows() {
        let q = row_posterior(row, w);
        for (j, &c) in row.iter().enumerate() {
            if c != ABSTAIN {
                agree[j] += q[c as usize];
                fired[j] += 1.0;
            }
        }
    }
    let mut g = Gradient {
        accuracy: vec![0.0; m],
        propensity: vec![0.0; m],
    };
    for j in 0..m {
        let (acc, prop) = (w.accuracy[j], w.propensity[j]);
        let (e_agree, e_fire) = cell_expectations(acc, prop, k);
        g.accuracy[j] = agree[j] - n * e_agree - 2.0 * w.l2_lambda * acc;
        g.propensity[j] = fired[j] - n * e_fire - 2.0 * w.l2_lambda * prop;
    }
    Ok(g)
}
