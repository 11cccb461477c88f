use serde::Serialize;
use talc_core::model::TrainingReport;
use talc_core::pipeline::{warmup_adapt, warmup_to_csv};
use talc_core::predictions::{score_labels, Score};

use super::{read_classes, read_gold, read_matrix};
use crate::args::WarmupArgs;
use crate::error::CliResult;
use crate::manifest::Recorder;

#[derive(Serialize)]
struct WarmupReport<'a> {
    warmup_n: usize,
    warmup_complete: bool,
    fitted: bool,
    fit_error: &'a Option<String>,
    training_report: &'a Option<TrainingReport>,
    /// Labels as emitted while streaming.
    #[serde(skip_serializing_if = "Option::is_none")]
    emitted_score: Option<Score>,
    /// Warm-up rows relabeled by the fitted aggregator.
    #[serde(skip_serializing_if = "Option::is_none")]
    revised_score: Option<Score>,
}

pub fn run(a: WarmupArgs, mut rec: Recorder) -> CliResult {
    let space = read_classes(&mut rec, &a.classes)?;
    let matrix = read_matrix(&mut rec, &a.matrix, &space)?;
    let gold = match &a.gold {
        Some(p) => Some(read_gold(&mut rec, p, &space)?),
        None => None,
    };
    let hyper = a.hyper.to_hyper(a.seed);
    rec.seed(a.seed);
    rec.config(&serde_json::json!({ "warmup_n": a.warmup_n, "model": hyper }));
    let outcome = warmup_adapt(&matrix, a.warmup_n, &hyper)?;

    let (emitted_score, revised_score) = match &gold {
        Some(g) => {
            let emitted = score_labels(
                outcome
                    .predictions
                    .iter()
                    .map(|p| (p.emitted.example_id.as_str(), Some(p.emitted.label))),
                g,
            )?;
            let revised = score_labels(
                outcome.predictions.iter().map(|p| {
                    (
                        p.emitted.example_id.as_str(),
                        Some(p.revised.as_ref().map_or(p.emitted.label, |r| r.label)),
                    )
                }),
                g,
            )?;
            (Some(emitted), Some(revised))
        }
        None => (None, None),
    };
    rec.write(
        &a.out_dir.join("predictions.csv"),
        &warmup_to_csv(&outcome, matrix.k()),
    )?;
    rec.write_json(
        &a.out_dir.join("warmup.json"),
        &WarmupReport {
            warmup_n: a.warmup_n,
            warmup_complete: outcome.warmup_complete,
            fitted: outcome.fitted,
            fit_error: &outcome.fit_error,
            training_report: &outcome.training_report,
            emitted_score,
            revised_score,
        },
    )?;
    rec.finish(&a.out_dir)?;
    if !outcome.warmup_complete {
        eprintln!(
            "warning: stream ended before {} rows; every label is majority vote",
            a.warmup_n
        );
    }
    if let (Some(e), Some(r)) = (emitted_score, revised_score) {
        println!("accuracy {:.4} (revised {:.4})", e.accuracy, r.accuracy);
    }
    Ok(())
}
