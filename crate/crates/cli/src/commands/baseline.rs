use talc_core::baselines::{majority_vote, mean_pool, random_labels, MvFallback};
use talc_core::data::SoftLabelingMatrix;
use talc_core::predictions::{predictions_to_csv, score_labels, score_predictions, Score};
use talc_core::{LabelSpace, ABSTAIN_TOKEN};

use super::{parse_json, read_classes, read_gold, read_matrix};
use crate::args::{BaselineArgs, BaselineKind, FallbackArg};
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

pub fn run(a: BaselineArgs, mut rec: Recorder) -> CliResult {
    let need = |opt: &Option<std::path::PathBuf>, flag: &str| {
        opt.clone()
            .ok_or_else(|| CliError::validation(format!("this baseline needs --{flag}")))
    };
    let (space, csv, score): (LabelSpace, String, Option<Score>) = match a.method {
        BaselineKind::MeanPool => {
            let path = need(&a.soft_matrix, "soft-matrix")?;
            let text = rec.read(&path)?;
            let soft: SoftLabelingMatrix = parse_json(&text, &path)?;
            let space = soft.label_space().clone();
            let result = mean_pool(&soft);
            let score = match &a.gold {
                Some(g) => Some(score_predictions(
                    &result.predictions,
                    &read_gold(&mut rec, g, &space)?,
                )?),
                None => None,
            };
            (
                space.clone(),
                predictions_to_csv(&result.predictions, space.k()),
                score,
            )
        }
        kind => {
            let space = read_classes(&mut rec, &need(&a.classes, "classes")?)?;
            let matrix = read_matrix(&mut rec, &need(&a.matrix, "matrix")?, &space)?;
            let gold = match &a.gold {
                Some(g) => Some(read_gold(&mut rec, g, &space)?),
                None => None,
            };
            if kind == BaselineKind::Single {
                let id = a
                    .column
                    .as_deref()
                    .ok_or_else(|| CliError::validation("single needs --column"))?;
                let j = matrix
                    .explanation_index(id)
                    .ok_or_else(|| CliError::validation(format!("no explanation column `{id}`")))?;
                let mut csv = String::from("example_id,label\n");
                let mut labels = Vec::with_capacity(matrix.n());
                for (ex, c) in matrix.example_ids().iter().zip(matrix.column(j)) {
                    let cell = usize::try_from(c).ok();
                    labels.push((ex.as_str(), cell));
                    match cell {
                        Some(c) => csv.push_str(&format!("{ex},{c}\n")),
                        None => csv.push_str(&format!("{ex},{ABSTAIN_TOKEN}\n")),
                    }
                }
                let score = match &gold {
                    Some(g) => Some(score_labels(labels, g)?),
                    None => None,
                };
                (space, csv, score)
            } else {
                let result = if kind == BaselineKind::Random {
                    random_labels(&matrix, a.seed)
                } else {
                    let fallback = match a.fallback {
                        FallbackArg::Class0 => MvFallback::FixedClass0,
                        FallbackArg::GlobalMode => MvFallback::GlobalMode,
                    };
                    majority_vote(&matrix, fallback)
                };
                let score = match &gold {
                    Some(g) => Some(score_predictions(&result.predictions, g)?),
                    None => None,
                };
                (
                    space.clone(),
                    predictions_to_csv(&result.predictions, space.k()),
                    score,
                )
            }
        }
    };
    rec.seed(a.seed);
    rec.config(&serde_json::json!({
        "method": format!("{:?}", a.method),
        "column": a.column,
        "fallback": format!("{:?}", a.fallback),
        "classes": space.class_names(),
    }));
    rec.write(&a.out_dir.join("predictions.csv"), &csv)?;
    if let Some(s) = score {
        rec.write_json(&a.out_dir.join("score.json"), &s)?;
        println!("accuracy {:.4} coverage {:.4}", s.accuracy, s.coverage);
    }
    rec.finish(&a.out_dir)?;
    Ok(())
}
