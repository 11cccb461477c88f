//! Robustness ablations over the explanation set: quality-ranked filtering,
//! removal of the best explanation, injection of the worst, malicious
//! relabeling, and sweeps over explanation and adaptation ratios.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{majority_vote, single_explanation, MvFallback};
use crate::data::{AdaptationConfig, GoldLabels, LabelingMatrix, TaskDescriptor, ABSTAIN};
use crate::error::{Result, TalcError};
use crate::pipeline::{talc_adapt, ModelHyper};
use crate::predictions::score_predictions;
use crate::simulate::flip_column;
use crate::stats::{pearson, spearman};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankKey {
    /// Higher is better.
    AccuracyMetadata,
    /// Lower is better.
    PerplexityMetadata,
    /// Column accuracy against gold; higher is better.
    EmpiricalAccuracy,
}

impl RankKey {
    pub fn name(self) -> &'static str {
        match self {
            RankKey::AccuracyMetadata => "accuracy",
            RankKey::PerplexityMetadata => "perplexity",
            RankKey::EmpiricalAccuracy => "empirical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankDirection {
    #[default]
    BestFirst,
    WorstFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingKey {
    pub key: RankKey,
    #[serde(default)]
    pub direction: RankDirection,
}

impl RankingKey {
    pub fn best_first(key: RankKey) -> Self {
        RankingKey {
            key,
            direction: RankDirection::BestFirst,
        }
    }
}

/// One arm's column selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSelection {
    TopPercent { percent: f64 },
    DropBest,
    AddWorstToTop3,
    ReplaceTop3Malicious,
    ExplanationRatio { ratio: f64, seed: u64 },
    All,
}

/// An ablation study; list-valued modes expand into one arm per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AblationMode {
    TopPercent { percents: Vec<f64> },
    DropBest,
    AddWorstToTop3,
    ReplaceTop3Malicious,
    ExplanationRatio { ratios: Vec<f64>, seed: u64 },
    AdaptationRatioSweep { alphas: Vec<f64> },
}

impl AblationMode {
    pub fn default_percents() -> Vec<f64> {
        vec![20.0, 40.0, 60.0, 80.0, 100.0]
    }

    /// 0.2, 0.3, ..., 1.0
    pub fn default_ratios() -> Vec<f64> {
        (2..=10).map(|t| t as f64 / 10.0).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            AblationMode::TopPercent { .. } => "top_percent",
            AblationMode::DropBest => "drop_best",
            AblationMode::AddWorstToTop3 => "add_worst_to_top3",
            AblationMode::ReplaceTop3Malicious => "replace_top3_malicious",
            AblationMode::ExplanationRatio { .. } => "explanation_ratio",
            AblationMode::AdaptationRatioSweep { .. } => "adaptation_ratio_sweep",
        }
    }

    /// `(parameter, selection, alpha override)` per arm.
    fn arms(&self, alpha: f64) -> Vec<(Option<f64>, ColumnSelection, f64)> {
        match self {
            AblationMode::TopPercent { percents } => percents
                .iter()
                .map(|&p| (Some(p), ColumnSelection::TopPercent { percent: p }, alpha))
                .collect(),
            AblationMode::DropBest => vec![(None, ColumnSelection::DropBest, alpha)],
            AblationMode::AddWorstToTop3 => vec![(None, ColumnSelection::AddWorstToTop3, alpha)],
            AblationMode::ReplaceTop3Malicious => {
                vec![(None, ColumnSelection::ReplaceTop3Malicious, alpha)]
            }
            AblationMode::ExplanationRatio { ratios, seed } => ratios
                .iter()
                .map(|&r| {
                    (
                        Some(r),
                        ColumnSelection::ExplanationRatio {
                            ratio: r,
                            seed: *seed,
                        },
                        alpha,
                    )
                })
                .collect(),
            AblationMode::AdaptationRatioSweep { alphas } => alphas
                .iter()
                .map(|&a| (Some(a), ColumnSelection::All, a))
                .collect(),
        }
    }

    fn needs_ranking(&self) -> bool {
        !matches!(
            self,
            AblationMode::ExplanationRatio { .. } | AblationMode::AdaptationRatioSweep { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub mode: AblationMode,
    pub ranking: RankingKey,
}

fn metadata_value(
    matrix: &LabelingMatrix,
    j: usize,
    descriptor: Option<&TaskDescriptor>,
    gold: Option<&GoldLabels>,
    key: RankKey,
) -> Result<f64> {
    let id = &matrix.explanation_ids()[j];
    let missing = |k: &'static str| TalcError::MissingMetadata {
        key: k,
        id: id.clone(),
    };
    match key {
        RankKey::AccuracyMetadata => descriptor
            .and_then(|d| d.explanation(id))
            .and_then(|e| e.accuracy_metadata)
            .ok_or_else(|| missing("accuracy")),
        RankKey::PerplexityMetadata => descriptor
            .and_then(|d| d.explanation(id))
            .and_then(|e| e.perplexity_metadata)
            .ok_or_else(|| missing("perplexity")),
        RankKey::EmpiricalAccuracy => {
            let gold = gold.ok_or_else(|| missing("gold labels for empirical accuracy"))?;
            Ok(single_explanation(matrix, j, gold)?.accuracy)
        }
    }
}

/// Column indices ordered by the ranking key. Ties (and, for empirical
/// accuracy, columns that never fire) are broken by explanation id.
pub fn rank_columns(
    matrix: &LabelingMatrix,
    descriptor: Option<&TaskDescriptor>,
    gold: Option<&GoldLabels>,
    ranking: RankingKey,
) -> Result<Vec<usize>> {
    let values = (0..matrix.m())
        .map(|j| metadata_value(matrix, j, descriptor, gold, ranking.key))
        .collect::<Result<Vec<f64>>>()?;
    // Larger "goodness" ranks first.
    let goodness = |v: f64| -> f64 {
        if v.is_nan() {
            f64::NEG_INFINITY
        } else if ranking.key == RankKey::PerplexityMetadata {
            -v
        } else {
            v
        }
    };
    let ids = matrix.explanation_ids();
    let mut order: Vec<usize> = (0..matrix.m()).collect();
    order.sort_by(|&a, &b| {
        let (ga, gb) = (goodness(values[a]), goodness(values[b]));
        let primary = match ranking.direction {
            RankDirection::BestFirst => gb.partial_cmp(&ga),
            RankDirection::WorstFirst => ga.partial_cmp(&gb),
        }
        .unwrap_or(Ordering::Equal);
        primary.then_with(|| ids[a].cmp(&ids[b]))
    });
    Ok(order)
}

/// `ceil(fraction * m)`, with slack so that e.g. `0.2 * 10` stays 2.
fn ceil_count(fraction: f64, m: usize) -> usize {
    ((fraction * m as f64 - 1e-9).ceil().max(0.0) as usize).min(m)
}

/// Applies one selection. Kept columns stay in their original order.
pub fn select_columns(
    matrix: &LabelingMatrix,
    ranked: &[usize],
    selection: ColumnSelection,
) -> Result<LabelingMatrix> {
    let m = matrix.m();
    let keep_sorted = |mut cols: Vec<usize>| -> Result<LabelingMatrix> {
        if cols.is_empty() {
            return Err(TalcError::Config("selection keeps no explanations".into()));
        }
        cols.sort_unstable();
        cols.dedup();
        matrix.select_columns(&cols)
    };
    match selection {
        ColumnSelection::All => Ok(matrix.clone()),
        ColumnSelection::TopPercent { percent } => {
            if !(percent > 0.0 && percent <= 100.0) {
                return Err(TalcError::Config(format!(
                    "top percent must lie in (0, 100], got {percent}"
                )));
            }
            keep_sorted(ranked[..ceil_count(percent / 100.0, m)].to_vec())
        }
        ColumnSelection::DropBest => keep_sorted(ranked[1..].to_vec()),
        ColumnSelection::AddWorstToTop3 => {
            if m < 4 {
                return Err(TalcError::Config(format!(
                    "add-worst needs at least 4 explanations, got {m}"
                )));
            }
            keep_sorted(vec![ranked[0], ranked[1], ranked[2], ranked[m - 1]])
        }
        ColumnSelection::ReplaceTop3Malicious => {
            if m < 3 {
                return Err(TalcError::Config(format!(
                    "malicious replacement needs at least 3 explanations, got {m}"
                )));
            }
            let mut out = matrix.clone();
            for &j in &ranked[..3] {
                out = flip_column(&out, j)?;
            }
            Ok(out)
        }
        ColumnSelection::ExplanationRatio { ratio, seed } => {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(TalcError::Config(format!(
                    "explanation ratio must lie in (0, 1], got {ratio}"
                )));
            }
            let count = ceil_count(ratio, m);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            keep_sorted(sample(&mut rng, m, count).into_vec())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub arm_id: usize,
    pub mode: String,
    pub param: Option<f64>,
    pub alpha: f64,
    pub selection: ColumnSelection,
    pub explanation_ids: Vec<String>,
    pub accuracy: f64,
    pub mv_accuracy: f64,
    /// Fraction of rows on which at least one selected explanation fired.
    pub coverage: f64,
    pub accuracy_weights: Vec<f64>,
    pub propensity_weights: Vec<f64>,
    pub column_accuracy: Vec<f64>,
    /// Learned accuracy weight vs. empirical column accuracy.
    pub weight_accuracy_correlation: Correlation,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub spec: AblationSpec,
    pub base_alpha: f64,
    /// Explanation ids in rank order (empty for modes that do not rank).
    pub ranking: Vec<String>,
    pub arms: Vec<ArmResult>,
}

impl AblationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arm_id,mode,key,param,accuracy,mv_accuracy,coverage\n");
        let key = if self.spec.mode.needs_ranking() {
            self.spec.ranking.key.name()
        } else {
            "none"
        };
        for a in &self.arms {
            let param = a.param.map(|p| p.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                a.arm_id, a.mode, key, param, a.accuracy, a.mv_accuracy, a.coverage
            ));
        }
        out
    }
}

fn run_arm(
    matrix: &LabelingMatrix,
    gold: &GoldLabels,
    arm_id: usize,
    mode: &AblationMode,
    (param, selection, alpha): (Option<f64>, ColumnSelection, f64),
    config: &AdaptationConfig,
    hyper: &ModelHyper,
) -> Result<ArmResult> {
    let cfg = AdaptationConfig { alpha, ..*config };
    let run = talc_adapt(matrix, &cfg, hyper)?;
    let accuracy = score_predictions(&run.predictions, gold)?.accuracy;
    let mv = majority_vote(matrix, MvFallback::FixedClass0);
    let mv_accuracy = score_predictions(&mv.predictions, gold)?.accuracy;
    let covered = matrix
        .rows()
        .filter(|r| r.iter().any(|&c| c != ABSTAIN))
        .count();
    let column_accuracy = (0..matrix.m())
        .map(|j| single_explanation(matrix, j, gold).map(|r| r.accuracy))
        .collect::<Result<Vec<f64>>>()?;
    let w = run.training_report.final_weights;
    let (xs, ys): (Vec<f64>, Vec<f64>) = w
        .accuracy
        .iter()
        .zip(&column_accuracy)
        .filter(|(_, a)| !a.is_nan())
        .map(|(&w, &a)| (w, a))
        .unzip();
    Ok(ArmResult {
        arm_id,
        mode: mode.name().to_string(),
        param,
        alpha,
        selection,
        explanation_ids: matrix.explanation_ids().to_vec(),
        accuracy,
        mv_accuracy,
        coverage: covered as f64 / matrix.n() as f64,
        accuracy_weights: w.accuracy,
        propensity_weights: w.propensity,
        column_accuracy,
        weight_accuracy_correlation: Correlation {
            pearson: pearson(&xs, &ys),
            spearman: spearman(&xs, &ys),
        },
        converged: run.training_report.converged,
    })
}

/// Runs every arm of `spec`: select columns, adapt, score against gold.
pub fn run_ablation(
    matrix: &LabelingMatrix,
    descriptor: Option<&TaskDescriptor>,
    gold: &GoldLabels,
    spec: &AblationSpec,
    config: &AdaptationConfig,
    hyper: &ModelHyper,
) -> Result<AblationReport> {
    gold.aligned_to(matrix)?;
    let ranked = if spec.mode.needs_ranking() {
        rank_columns(matrix, descriptor, Some(gold), spec.ranking)?
    } else {
        (0..matrix.m()).collect()
    };
    let mut arms = Vec::new();
    for (arm_id, arm) in spec.mode.arms(config.alpha).into_iter().enumerate() {
        let selected = select_columns(matrix, &ranked, arm.1)?;
        arms.push(run_arm(
            &selected, gold, arm_id, &spec.mode, arm, config, hyper,
        )?);
    }
    Ok(AblationReport {
        spec: spec.clone(),
        base_alpha: config.alpha,
        ranking: if spec.mode.needs_ranking() {
            ranked
                .iter()
                .map(|&j| matrix.explanation_ids()[j].clone())
                .collect()
        } else {
            Vec::new()
        },
        arms,
    })
}
