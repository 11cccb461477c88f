//! Test-time aggregation of explanation-conditioned labels.
//!
//! A task is a labeling matrix: rows are unlabeled examples, columns are
//! natural-language explanations, and each cell is the class a teacher model
//! chose when prompted with that explanation (or an abstention). A log-linear
//! label model learns per-explanation accuracy and firing weights from the
//! matrix alone and produces one aggregated label per example.

pub mod ablate;
pub mod baselines;
pub mod data;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod predictions;
pub mod simulate;
pub mod stats;

pub use data::{
    split_by_alpha, AdaptationConfig, GoldLabels, LabelSpace, LabelingMatrix, TaskDescriptor,
    ABSTAIN, ABSTAIN_TOKEN,
};
pub use error::{Result, TalcError};
pub use model::{fit_em, FitOptions, InitPolicy, ModelWeights, TrainingReport};
pub use pipeline::{talc_adapt, AdaptationRun, Inference, ModelHyper};
