//! Test-time adaptation end to end: split, fit on the adaptation rows, label
//! every row with the fitted weights. Also a streaming variant that labels
//! the first arrivals by majority vote until enough rows are pooled to fit.

use serde::{Deserialize, Serialize};

use crate::baselines::{majority_vote, MvFallback};
use crate::data::{split_by_alpha, AdaptationConfig, LabelSpace, LabelingMatrix};
use crate::error::{Result, TalcError};
use crate::model::{
    fit_em, gibbs_map, map_exact, FitOptions, GibbsOptions, ModelWeights, TrainingReport,
};
use crate::predictions::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inference {
    #[default]
    Exact,
    Gibbs(GibbsOptions),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelHyper {
    pub fit: FitOptions,
    pub inference: Inference,
}

impl ModelHyper {
    pub fn infer(&self, matrix: &LabelingMatrix, w: &ModelWeights) -> Result<Vec<Prediction>> {
        match &self.inference {
            Inference::Exact => map_exact(matrix, w),
            Inference::Gibbs(opts) => gibbs_map(matrix, w, opts),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub n_adapt: usize,
    /// Left empty unless the caller supplies one, so runs stay byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRun {
    pub config: AdaptationConfig,
    pub explanation_ids: Vec<String>,
    pub training_report: TrainingReport,
    /// One per matrix row, in the matrix's row order.
    pub predictions: Vec<Prediction>,
    pub adaptation_rows: Vec<usize>,
    pub provenance: Provenance,
}

/// Fits on the adaptation split only, then labels adaptation and held-out
/// rows alike with the fitted weights.
pub fn talc_adapt(
    matrix: &LabelingMatrix,
    config: &AdaptationConfig,
    hyper: &ModelHyper,
) -> Result<AdaptationRun> {
    let split = split_by_alpha(matrix, config)?;
    let report = fit_em(&split.adaptation, &hyper.fit)?;
    let predictions = hyper.infer(matrix, &report.final_weights)?;
    Ok(AdaptationRun {
        config: *config,
        explanation_ids: matrix.explanation_ids().to_vec(),
        provenance: Provenance {
            n: matrix.n(),
            m: matrix.m(),
            k: matrix.k(),
            n_adapt: split.adaptation_rows.len(),
            timestamp: None,
        },
        training_report: report,
        predictions,
        adaptation_rows: split.adaptation_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamPhase {
    /// Labeled on arrival by the majority-vote fallback.
    Warmup,
    /// Labeled on arrival by the fitted aggregator.
    Adapted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPrediction {
    pub phase: StreamPhase,
    /// The label emitted when the row arrived.
    pub emitted: Prediction,
    /// For warm-up rows, the label assigned after the aggregator was fitted.
    pub revised: Option<Prediction>,
}

/// Online labeler: majority vote for the first `warmup_n` arrivals, then a
/// single fit on the pooled rows and aggregator labels from there on.
#[derive(Debug)]
pub struct WarmupAdapter {
    label_space: LabelSpace,
    explanation_ids: Vec<String>,
    warmup_n: usize,
    hyper: ModelHyper,
    pool_ids: Vec<String>,
    pool_cells: Vec<i32>,
    weights: Option<ModelWeights>,
    report: Option<TrainingReport>,
    fit_error: Option<String>,
    out: Vec<StreamPrediction>,
}

impl WarmupAdapter {
    pub fn new(
        label_space: LabelSpace,
        explanation_ids: Vec<String>,
        warmup_n: usize,
        hyper: ModelHyper,
    ) -> Result<Self> {
        if warmup_n == 0 {
            return Err(TalcError::Config("warm-up length must be >= 1".into()));
        }
        if explanation_ids.is_empty() {
            return Err(TalcError::EmptyMatrix);
        }
        Ok(WarmupAdapter {
            label_space,
            explanation_ids,
            warmup_n,
            hyper,
            pool_ids: Vec::new(),
            pool_cells: Vec::new(),
            weights: None,
            report: None,
            fit_error: None,
            out: Vec::new(),
        })
    }

    fn single_row(&self, id: &str, row: &[i32]) -> Result<LabelingMatrix> {
        LabelingMatrix::new(
            vec![id.to_string()],
            self.explanation_ids.clone(),
            row.to_vec(),
            self.label_space.clone(),
        )
    }

    /// Labels one arriving row and returns the label emitted for it.
    pub fn push(&mut self, id: &str, row: &[i32]) -> Result<Prediction> {
        let single = self.single_row(id, row)?;
        if self.out.iter().any(|p| p.emitted.example_id == id) {
            return Err(TalcError::DuplicateId {
                kind: "example",
                id: id.to_string(),
            });
        }
        if let Some(w) = &self.weights {
            let p = self.hyper.infer(&single, w)?.remove(0);
            self.out.push(StreamPrediction {
                phase: StreamPhase::Adapted,
                emitted: p.clone(),
                revised: None,
            });
            return Ok(p);
        }
        let p = majority_vote(&single, MvFallback::FixedClass0)
            .predictions
            .remove(0);
        self.out.push(StreamPrediction {
            phase: StreamPhase::Warmup,
            emitted: p.clone(),
            revised: None,
        });
        self.pool_ids.push(id.to_string());
        self.pool_cells.extend_from_slice(row);
        if self.pool_ids.len() == self.warmup_n && self.fit_error.is_none() {
            self.fit_pool()?;
        }
        Ok(p)
    }

    fn fit_pool(&mut self) -> Result<()> {
        let pool = LabelingMatrix::new(
            self.pool_ids.clone(),
            self.explanation_ids.clone(),
            self.pool_cells.clone(),
            self.label_space.clone(),
        )?;
        match fit_em(&pool, &self.hyper.fit) {
            Ok(report) => {
                let revised = self.hyper.infer(&pool, &report.final_weights)?;
                for (slot, p) in self.out.iter_mut().zip(revised) {
                    slot.revised = Some(p);
                }
                self.weights = Some(report.final_weights.clone());
                self.report = Some(report);
            }
            Err(TalcError::AllAbstain) => {
                log::warn!("warm-up pool has no labels; staying on majority vote");
                self.fit_error = Some(TalcError::AllAbstain.to_string());
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }

    pub fn finish(self) -> WarmupOutcome {
        WarmupOutcome {
            warmup_complete: self.pool_ids.len() >= self.warmup_n,
            fitted: self.weights.is_some(),
            fit_error: self.fit_error,
            training_report: self.report,
            predictions: self.out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmupOutcome {
    /// False when the stream ended before `warmup_n` rows arrived.
    pub warmup_complete: bool,
    pub fitted: bool,
    pub fit_error: Option<String>,
    pub training_report: Option<TrainingReport>,
    pub predictions: Vec<StreamPrediction>,
}

/// Replays the rows of `matrix` in order through a [`WarmupAdapter`].
pub fn warmup_adapt(
    matrix: &LabelingMatrix,
    warmup_n: usize,
    hyper: &ModelHyper,
) -> Result<WarmupOutcome> {
    let mut adapter = WarmupAdapter::new(
        matrix.label_space().clone(),
        matrix.explanation_ids().to_vec(),
        warmup_n,
        hyper.clone(),
    )?;
    for (id, row) in matrix.example_ids().iter().zip(matrix.rows()) {
        adapter.push(id, row)?;
    }
    let outcome = adapter.finish();
    if !outcome.warmup_complete {
        log::warn!(
            "stream ended after {} rows, before the warm-up length {}",
            matrix.n(),
            warmup_n
        );
    }
    Ok(outcome)
}

pub fn warmup_to_csv(outcome: &WarmupOutcome, k: usize) -> String {
    let mut out = String::from("example_id,label,tie_flag");
    for c in 0..k {
        out.push_str(&format!(",posterior_{c}"));
    }
    out.push_str(",phase,revised_label\n");
    for sp in &outcome.predictions {
        let p = &sp.emitted;
        out.push_str(&format!("{},{},{}", p.example_id, p.label, p.tie));
        for v in &p.posterior {
            out.push_str(&format!(",{v}"));
        }
        let phase = match sp.phase {
            StreamPhase::Warmup => "warmup",
            StreamPhase::Adapted => "adapted",
        };
        let revised = sp
            .revised
            .as_ref()
            .map(|r| r.label.to_string())
            .unwrap_or_default();
        out.push_str(&format!(",{phase},{revised}\n"));
    }
    out
}
