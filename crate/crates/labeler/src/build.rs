use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use serde::{Deserialize, Serialize};
use talc_core::{LabelingMatrix, TaskDescriptor};

use crate::cache::Cache;
use crate::endpoint::{Completer, EndpointConfig};
use crate::error::{LabelerError, Result};
use crate::template::{PromptTemplate, Verdict};

pub const CONCAT_COLUMN_ID: &str = "concat";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// One prompt per (example, explanation).
    #[default]
    PerExplanation,
    /// One prompt per example with every explanation in context.
    Concat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellIssue {
    pub example_id: String,
    pub explanation_id: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingStats {
    pub prompts: usize,
    pub cache_hits: usize,
    pub requests: usize,
    /// Cells left as abstain because no completion could be obtained.
    pub failures: Vec<CellIssue>,
    /// Completions that matched no verbalizer token; `detail` is the raw text.
    pub unmatched: Vec<CellIssue>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelingRun {
    pub matrix: LabelingMatrix,
    pub stats: LabelingStats,
}

struct Job {
    row: usize,
    col: usize,
    prompt: String,
}

enum Outcome {
    Cached(String),
    Fetched(String),
    Failed(String),
}

fn jobs(
    descriptor: &TaskDescriptor,
    template: &PromptTemplate,
    mode: LabelMode,
) -> Result<(Vec<Job>, Vec<String>)> {
    let examples = descriptor
        .example_records
        .as_ref()
        .filter(|e| !e.is_empty())
        .ok_or(LabelerError::MissingExamples)?;
    if descriptor.explanations.is_empty() {
        return Err(LabelerError::Config("task has no explanations".into()));
    }
    let mut out = Vec::new();
    let columns = match mode {
        LabelMode::PerExplanation => {
            for (row, ex) in examples.iter().enumerate() {
                for (col, e) in descriptor.explanations.iter().enumerate() {
                    out.push(Job {
                        row,
                        col,
                        prompt: template.render(&[e.text.as_str()], &ex.serialized_features),
                    });
                }
            }
            descriptor
                .explanations
                .iter()
                .map(|e| e.id.clone())
                .collect()
        }
        LabelMode::Concat => {
            let texts: Vec<&str> = descriptor
                .explanations
                .iter()
                .map(|e| e.text.as_str())
                .collect();
            for (row, ex) in examples.iter().enumerate() {
                out.push(Job {
                    row,
                    col: 0,
                    prompt: template.render(&texts, &ex.serialized_features),
                });
            }
            vec![CONCAT_COLUMN_ID.to_string()]
        }
    };
    Ok((out, columns))
}

fn resolve(
    job: &Job,
    cache: &Cache,
    identity: &str,
    endpoint: &EndpointConfig,
    completer: &dyn Completer,
) -> Result<Outcome> {
    let key = Cache::key(identity, &job.prompt);
    if let Some(entry) = cache.get(&key)? {
        return Ok(Outcome::Cached(entry.completion));
    }
    if endpoint.offline {
        return Ok(Outcome::Failed(LabelerError::CacheMiss.to_string()));
    }
    match completer.complete(&job.prompt) {
        Ok(text) => {
            cache.put(&key, &job.prompt, &text)?;
            Ok(Outcome::Fetched(text))
        }
        Err(e) if e.is_transient() => Ok(Outcome::Failed(e.to_string())),
        Err(e) => Err(e),
    }
}

/// Prompts the endpoint for every cell and assembles the labeling matrix.
/// Cached completions are reused without any request; the matrix is in
/// (example, explanation) order regardless of completion order.
pub fn build_matrix(
    descriptor: &TaskDescriptor,
    template: &PromptTemplate,
    endpoint: &EndpointConfig,
    completer: &dyn Completer,
    mode: LabelMode,
) -> Result<LabelingRun> {
    descriptor.validate()?;
    endpoint.validate()?;
    template.validate(&descriptor.label_space)?;
    let (jobs, columns) = jobs(descriptor, template, mode)?;
    let cache = Cache::open(&endpoint.cache_dir)?;
    let identity = endpoint.identity();

    let next = AtomicUsize::new(0);
    let workers = endpoint.max_in_flight.min(jobs.len()).max(1);
    let results: Vec<Vec<(usize, Result<Outcome>)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let idx = next.fetch_add(1, Ordering::Relaxed);
                        let Some(job) = jobs.get(idx) else { break };
                        local.push((idx, resolve(job, &cache, &identity, endpoint, completer)));
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("labeling worker panicked"))
            .collect()
    });
    let mut outcomes: Vec<Option<Outcome>> = (0..jobs.len()).map(|_| None).collect();
    for (idx, r) in results.into_iter().flatten() {
        outcomes[idx] = Some(r?);
    }

    let examples = descriptor
        .example_records
        .as_ref()
        .expect("checked in jobs()");
    let m = columns.len();
    let mut cells = vec![talc_core::ABSTAIN; examples.len() * m];
    let mut stats = LabelingStats {
        prompts: jobs.len(),
        cache_hits: 0,
        requests: 0,
        failures: Vec::new(),
        unmatched: Vec::new(),
        complete: true,
    };
    for (job, outcome) in jobs.iter().zip(outcomes) {
        let issue = |detail: String| CellIssue {
            example_id: examples[job.row].id.clone(),
            explanation_id: columns[job.col].clone(),
            detail,
        };
        let completion = match outcome.expect("every job resolved") {
            Outcome::Cached(t) => {
                stats.cache_hits += 1;
                t
            }
            Outcome::Fetched(t) => {
                stats.requests += 1;
                t
            }
            Outcome::Failed(why) => {
                log::warn!(
                    "no completion for ({}, {}): {why}",
                    examples[job.row].id,
                    columns[job.col]
                );
                stats.failures.push(issue(why));
                stats.complete = false;
                continue;
            }
        };
        let verdict = template.interpret(&completion);
        if verdict == Verdict::Unmatched {
            log::info!(
                "unmatched completion for ({}, {}): {completion:?}",
                examples[job.row].id,
                columns[job.col]
            );
            stats.unmatched.push(issue(completion));
        }
        cells[job.row * m + job.col] = verdict.cell();
    }
    let matrix = LabelingMatrix::new(
        examples.iter().map(|e| e.id.clone()).collect(),
        columns,
        cells,
        descriptor.label_space.clone(),
    )?;
    Ok(LabelingRun { matrix, stats })
}
