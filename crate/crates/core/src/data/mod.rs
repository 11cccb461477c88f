//! Domain types, file formats and adaptation splitting.

mod gold;
mod label_space;
mod matrix;
mod split;
mod task;

pub use gold::GoldLabels;
pub use label_space::{LabelSpace, ABSTAIN, ABSTAIN_TOKEN};
pub use matrix::{argmax_lowest, LabelingMatrix, SoftLabelingMatrix};
pub use split::{split_by_alpha, AdaptationConfig, Split};
pub use task::{ExampleRecord, ExplanationRecord, TaskDescriptor};
