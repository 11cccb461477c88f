//! The log-linear label aggregator: likelihood, gradients, EM and MAP inference.

mod em;
mod inference;
mod likelihood;
mod math;
pub mod oracle;
mod weights;

pub use em::{fit_em, fit_from, initial_weights, FitOptions, TrainingReport};
pub use inference::{gibbs_map, map_exact, GibbsOptions};
pub use likelihood::{
    class_scores, gradient, log_partition, marginal_log_likelihood, posterior, score, Gradient,
    Posterior,
};
pub use math::log_sum_exp;
pub use oracle::{brute_force_oracle, OracleResult};
pub use weights::{ExplanationWeight, InitPolicy, ModelWeights, WeightsDocument};
