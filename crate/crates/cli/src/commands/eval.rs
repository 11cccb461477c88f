use serde::Serialize;
use talc_core::baselines::{per_explanation_table, SingleExplanationResult};
use talc_core::predictions::{parse_prediction_labels, score_labels, Score};

use super::{read_classes, read_gold, read_matrix};
use crate::args::EvalArgs;
use crate::error::CliResult;
use crate::manifest::Recorder;

#[derive(Serialize)]
struct EvalReport {
    score: Score,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_explanation: Option<Vec<SingleExplanationResult>>,
}

pub fn run(a: EvalArgs, mut rec: Recorder) -> CliResult {
    let space = read_classes(&mut rec, &a.classes)?;
    let pred_text = rec.read(&a.pred)?;
    let preds = parse_prediction_labels(&pred_text, &space)?;
    let gold = read_gold(&mut rec, &a.gold, &space)?;
    let score = score_labels(
        preds.iter().map(|p| (p.example_id.as_str(), p.label)),
        &gold,
    )?;
    let per_explanation = match (&a.matrix, a.per_explanation) {
        (Some(path), true) => {
            let matrix = read_matrix(&mut rec, path, &space)?;
            Some(per_explanation_table(&matrix, &gold)?)
        }
        _ => None,
    };
    rec.config(&serde_json::json!({ "per_explanation": a.per_explanation }));
    let report = EvalReport {
        score,
        per_explanation,
    };
    rec.write_json(&a.out_dir.join("eval.json"), &report)?;
    rec.finish(&a.out_dir)?;

    println!(
        "accuracy {:.4} coverage {:.4}",
        score.accuracy, score.coverage
    );
    if let Some(table) = &report.per_explanation {
        println!("explanation,accuracy,coverage");
        for r in table {
            let acc = if r.accuracy_defined {
                format!("{:.4}", r.accuracy)
            } else {
                "n/a".to_string()
            };
            println!("{},{acc},{:.4}", r.explanation_id, r.coverage);
        }
    }
    Ok(())
}
