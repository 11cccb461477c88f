use serde::Serialize;
use talc_core::ablate::{
    run_ablation, AblationMode, AblationSpec, RankDirection, RankKey, RankingKey,
};
use talc_core::pipeline::ModelHyper;
use talc_core::{AdaptationConfig, TaskDescriptor};

use super::{parse_json, read_classes, read_gold, read_matrix};
use crate::args::{AblateArgs, AblateMode, RankBy};
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    spec: &'a AblationSpec,
    adaptation: &'a AdaptationConfig,
    model: &'a ModelHyper,
}

fn mode(a: &AblateArgs) -> AblationMode {
    match a.mode {
        AblateMode::TopPercent => AblationMode::TopPercent {
            percents: a.x.clone().unwrap_or_else(AblationMode::default_percents),
        },
        AblateMode::DropBest => AblationMode::DropBest,
        AblateMode::AddWorst => AblationMode::AddWorstToTop3,
        AblateMode::Malicious => AblationMode::ReplaceTop3Malicious,
        AblateMode::ExplanationRatio => AblationMode::ExplanationRatio {
            ratios: a.ratio.clone().unwrap_or_else(AblationMode::default_ratios),
            seed: a.seed,
        },
        AblateMode::AdaptationSweep => AblationMode::AdaptationRatioSweep {
            alphas: a.ratio.clone().unwrap_or_else(AblationMode::default_ratios),
        },
    }
}

pub fn run(a: AblateArgs, mut rec: Recorder) -> CliResult {
    let descriptor: Option<TaskDescriptor> = match &a.task {
        Some(p) => {
            let text = rec.read(p)?;
            let d: TaskDescriptor = parse_json(&text, p)?;
            d.validate()?;
            Some(d)
        }
        None => None,
    };
    let space = match (&a.classes, &descriptor) {
        (Some(p), _) => read_classes(&mut rec, p)?,
        (None, Some(d)) => d.label_space.clone(),
        (None, None) => return Err(CliError::validation("ablate needs --task or --classes")),
    };
    let matrix = read_matrix(&mut rec, &a.matrix, &space)?;
    let gold = read_gold(&mut rec, &a.gold, &space)?;
    let spec = AblationSpec {
        mode: mode(&a),
        ranking: RankingKey {
            key: match a.rank_by {
                RankBy::Accuracy => RankKey::AccuracyMetadata,
                RankBy::Perplexity => RankKey::PerplexityMetadata,
                RankBy::Empirical => RankKey::EmpiricalAccuracy,
            },
            direction: if a.worst_first {
                RankDirection::WorstFirst
            } else {
                RankDirection::BestFirst
            },
        },
    };
    let config = AdaptationConfig {
        alpha: a.alpha,
        seed: a.seed,
        shuffle_before_split: false,
    };
    config.validate()?;
    let hyper = a.hyper.to_hyper(a.seed);
    rec.seed(a.seed);
    rec.config(&ResolvedConfig {
        spec: &spec,
        adaptation: &config,
        model: &hyper,
    });

    let report = run_ablation(&matrix, descriptor.as_ref(), &gold, &spec, &config, &hyper)?;
    rec.write_json(&a.out_dir.join("ablation.json"), &report)?;
    rec.write(&a.out_dir.join("ablation.csv"), &report.to_csv())?;
    rec.finish(&a.out_dir)?;
    for arm in &report.arms {
        let param = arm.param.map(|p| format!(" {p}")).unwrap_or_default();
        println!(
            "{}{param}: accuracy {:.4} (majority vote {:.4})",
            arm.mode, arm.accuracy, arm.mv_accuracy
        );
    }
    Ok(())
}
