//! Unsupervised weight learning.
//!
//! Each iteration computes the latent-label posterior at the current weights
//! (E-step) and takes one ascent step on the expected complete-data
//! objective (M-step). The gradient of that objective at the current point
//! equals the gradient of the marginal log-likelihood, so the step is a
//! gradient step on the likelihood; a step that would lower the likelihood
//! is halved until it does not.

use serde::{Deserialize, Serialize};

use super::likelihood::{check_dims, gradient, marginal_log_likelihood};
use super::weights::{InitPolicy, ModelWeights};
use crate::baselines::vote_counts;
use crate::data::{LabelingMatrix, ABSTAIN};
use crate::error::{Result, TalcError};

const MAX_HALVINGS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub init: InitPolicy,
    pub max_iters: usize,
    /// Stop once the per-example likelihood gain falls below this.
    pub tol: f64,
    /// Step length applied to the per-example gradient.
    pub step_size: f64,
    pub l2_lambda: f64,
    /// Fixed class log-prior; `None` means uniform.
    pub class_log_prior: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            init: InitPolicy::default(),
            max_iters: 500,
            tol: 1e-6,
            step_size: 1.0,
            l2_lambda: 1e-4,
            class_log_prior: None,
        }
    }
}

impl FitOptions {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.tol.is_nan()
            || self.tol < 0.0
            || self.step_size.is_nan()
            || self.step_size <= 0.0
            || self.l2_lambda.is_nan()
            || self.l2_lambda < 0.0
        {
            return Err(TalcError::Config(
                "tol and l2_lambda must be >= 0, step_size > 0".into(),
            ));
        }
        if let Some(p) = &self.class_log_prior {
            if p.len() != k || p.iter().any(|v| !v.is_finite()) {
                return Err(TalcError::Config(format!(
                    "class prior must have {k} finite entries"
                )));
            }
        }
        if let InitPolicy::MajorityVote { epsilon } = self.init {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(TalcError::Config("init epsilon must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub iterations: usize,
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
    pub final_weights: ModelWeights,
    /// Columns that never fire; their accuracy weight is frozen at its initial value.
    pub all_abstain_columns: Vec<usize>,
    pub final_gradient_norm: f64,
}

/// Starting weights for EM.
pub fn initial_weights(matrix: &LabelingMatrix, opts: &FitOptions) -> ModelWeights {
    let k = matrix.k();
    let m = matrix.m();
    let prior = opts.class_log_prior.clone().unwrap_or_else(|| vec![0.0; k]);
    let (accuracy, propensity) = match opts.init {
        InitPolicy::Constant {
            accuracy,
            propensity,
        } => (vec![accuracy; m], vec![propensity; m]),
        InitPolicy::MajorityVote { epsilon } => majority_vote_moments(matrix, epsilon),
    };
    ModelWeights {
        accuracy,
        propensity,
        class_log_prior: prior,
        l2_lambda: opts.l2_lambda,
    }
}

/// Treats smoothed majority-vote posteriors as the E-step output and solves
/// the M-step by moment matching: the model's agree / disagree / abstain
/// probabilities per column are set to the expected counts, each with one
/// pseudo-count so the weights stay finite.
fn majority_vote_moments(matrix: &LabelingMatrix, epsilon: f64) -> (Vec<f64>, Vec<f64>) {
    let k = matrix.k();
    let m = matrix.m();
    let mut agree = vec![0.0; m];
    let mut fired = vec![0.0; m];
    for row in matrix.rows() {
        let counts = vote_counts(row, k);
        let top = counts.iter().copied().max().unwrap_or(0);
        let winners: Vec<usize> = (0..k).filter(|&c| counts[c] == top).collect();
        let mut q = vec![0.0; k];
        for &c in &winners {
            q[c] = 1.0 / winners.len() as f64;
        }
        for v in q.iter_mut() {
            *v = (1.0 - epsilon) * *v + epsilon / k as f64;
        }
        for (j, &c) in row.iter().enumerate() {
            if c != ABSTAIN {
                agree[j] += q[c as usize];
                fired[j] += 1.0;
            }
        }
    }
    let n = matrix.n() as f64;
    let ln_km1 = ((k - 1) as f64).ln();
    let mut acc = Vec::with_capacity(m);
    let mut prop = Vec::with_capacity(m);
    for j in 0..m {
        let a = agree[j] + 1.0;
        let d = fired[j] - agree[j] + 1.0;
        let b = n - fired[j] + 1.0;
        acc.push((a / d).ln() + ln_km1);
        prop.push((d / b).ln() - ln_km1);
    }
    (acc, prop)
}

pub fn fit_em(matrix: &LabelingMatrix, opts: &FitOptions) -> Result<TrainingReport> {
    opts.validate(matrix.k())?;
    if !matrix.has_any_label() {
        return Err(TalcError::AllAbstain);
    }
    fit_from(matrix, initial_weights(matrix, opts), opts)
}

/// Runs EM from explicit starting weights.
pub fn fit_from(
    matrix: &LabelingMatrix,
    start: ModelWeights,
    opts: &FitOptions,
) -> Result<TrainingReport> {
    check_dims(matrix, &start)?;
    let n = matrix.n() as f64;
    let m = matrix.m();
    let all_abstain_columns: Vec<usize> = (0..m)
        .filter(|&j| matrix.column_coverage_count(j) == 0)
        .collect();

    let mut w = start;
    let mut ll = marginal_log_likelihood(matrix, &w)?;
    if !ll.is_finite() {
        return Err(TalcError::NonFinite { iteration: 0 });
    }
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = gradient(matrix, &w)?;

    while iterations < opts.max_iters {
        iterations += 1;
        for &j in &all_abstain_columns {
            grad.accuracy[j] = 0.0;
        }
        let direction: Vec<f64> = grad.flat().iter().map(|g| g / n).collect();
        let current = w.flat();

        let mut step = opts.step_size;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = current
                .iter()
                .zip(&direction)
                .map(|(x, d)| x + step * d)
                .collect();
            let cw = w.with_flat(&candidate);
            let cll = marginal_log_likelihood(matrix, &cw)?;
            if cll.is_nan() {
                return Err(TalcError::NonFinite {
                    iteration: iterations,
                });
            }
            if cll >= ll {
                accepted = Some((cw, cll));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_ll)) = accepted else {
            converged = true;
            break;
        };
        if !next_ll.is_finite() {
            return Err(TalcError::NonFinite {
                iteration: iterations,
            });
        }
        let gain = next_ll - ll;
        w = next;
        ll = next_ll;
        trace.push(ll);
        grad = gradient(matrix, &w)?;
        if gain / n < opts.tol {
            converged = true;
            break;
        }
    }
    for &j in &all_abstain_columns {
        grad.accuracy[j] = 0.0;
    }
    if !all_abstain_columns.is_empty() {
        log::warn!(
            "{} explanation column(s) never fire: {:?}",
            all_abstain_columns.len(),
            all_abstain_columns
        );
    }
    Ok(TrainingReport {
        iterations,
        log_likelihood_trace: trace,
        converged,
        final_gradient_norm: grad.norm(),
        final_weights: w,
        all_abstain_columns,
    })
}
