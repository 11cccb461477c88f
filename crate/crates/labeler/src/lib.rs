//! Builds labeling matrices by prompting a text-completion endpoint once per
//! (example, explanation) pair and mapping each answer to a class or an
//! abstention. Completions are cached on disk so re-runs need no network.

mod build;
mod cache;
mod endpoint;
mod error;
mod template;

pub use build::{build_matrix, CellIssue, LabelMode, LabelingRun, LabelingStats, CONCAT_COLUMN_ID};
pub use cache::{Cache, CacheEntry};
pub use endpoint::{Completer, EndpointConfig, HttpCompleter};
pub use error::{LabelerError, Result};
pub use template::{PromptTemplate, Verdict};
