use serde::Serialize;
use talc_core::model::{TrainingReport, WeightsDocument};
use talc_core::pipeline::{talc_adapt, ModelHyper, Provenance};
use talc_core::predictions::{predictions_to_csv, score_predictions, Score};
use talc_core::AdaptationConfig;

use super::{read_classes, read_gold, read_matrix};
use crate::args::AdaptArgs;
use crate::error::CliResult;
use crate::manifest::Recorder;

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    adaptation: &'a AdaptationConfig,
    model: &'a ModelHyper,
}

#[derive(Serialize)]
struct RunReport<'a> {
    explanation_ids: &'a [String],
    provenance: &'a Provenance,
    training_report: &'a TrainingReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<Score>,
}

pub fn run(a: AdaptArgs, mut rec: Recorder) -> CliResult {
    let space = read_classes(&mut rec, &a.classes)?;
    let matrix = read_matrix(&mut rec, &a.matrix, &space)?;
    let gold = match &a.gold {
        Some(p) => Some(read_gold(&mut rec, p, &space)?),
        None => None,
    };
    let config = AdaptationConfig {
        alpha: a.alpha,
        seed: a.seed,
        shuffle_before_split: a.shuffle,
    };
    config.validate()?;
    let hyper = a.hyper.to_hyper(a.seed);
    rec.seed(a.seed);
    rec.config(&ResolvedConfig {
        adaptation: &config,
        model: &hyper,
    });

    let run = talc_adapt(&matrix, &config, &hyper)?;
    let score = match &gold {
        Some(g) => Some(score_predictions(&run.predictions, g)?),
        None => None,
    };

    rec.write(
        &a.out_dir.join("predictions.csv"),
        &predictions_to_csv(&run.predictions, matrix.k()),
    )?;
    let weights = WeightsDocument::new(
        &run.training_report.final_weights,
        &run.explanation_ids,
        hyper.fit.init.clone(),
        a.seed,
    );
    let weights_path = a
        .weights_out
        .clone()
        .unwrap_or_else(|| a.out_dir.join("weights.json"));
    rec.write_json(&weights_path, &weights)?;
    rec.write_json(
        &a.out_dir.join("run.json"),
        &RunReport {
            explanation_ids: &run.explanation_ids,
            provenance: &run.provenance,
            training_report: &run.training_report,
            score,
        },
    )?;
    rec.finish(&a.out_dir)?;

    let report = &run.training_report;
    println!(
        "fitted on {} of {} rows: {} iterations, converged {}",
        run.provenance.n_adapt, run.provenance.n, report.iterations, report.converged
    );
    if let Some(s) = score {
        println!("accuracy {:.4} coverage {:.4}", s.accuracy, s.coverage);
    }
    Ok(())
}
