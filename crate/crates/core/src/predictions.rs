//! Per-example predictions and their CSV form
//! `example_id,label,tie_flag,posterior_0..posterior_{k-1}`.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::{GoldLabels, LabelSpace, ABSTAIN_TOKEN};
use crate::error::{Result, TalcError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub example_id: String,
    pub label: usize,
    /// Set when the label was chosen by tie-break or fallback.
    pub tie: bool,
    pub posterior: Vec<f64>,
}

pub fn predictions_to_csv(preds: &[Prediction], k: usize) -> String {
    let mut out = String::from("example_id,label,tie_flag");
    for c in 0..k {
        out.push_str(&format!(",posterior_{c}"));
    }
    out.push('\n');
    for p in preds {
        out.push_str(&format!("{},{},{}", p.example_id, p.label, p.tie));
        for v in &p.posterior {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// A label read back from a prediction file; `None` means abstain.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedLabel {
    pub example_id: String,
    pub label: Option<usize>,
}

/// Reads any CSV whose first two columns are `example_id,label`.
pub fn parse_prediction_labels(text: &str, space: &LabelSpace) -> Result<Vec<PredictedLabel>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "example_id" || &headers[1] != "label" {
        return Err(TalcError::Parse {
            line: 1,
            msg: "prediction header must start with `example_id,label`".into(),
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() < 2 {
            return Err(TalcError::Parse {
                line,
                msg: "missing label".into(),
            });
        }
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(TalcError::DuplicateId {
                kind: "prediction",
                id,
            });
        }
        let label = if &rec[1] == ABSTAIN_TOKEN {
            None
        } else {
            Some(space.parse_class(&rec[1])?)
        };
        out.push(PredictedLabel {
            example_id: id,
            label,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// Correct predictions over all gold examples.
    pub accuracy: f64,
    /// Fraction of gold examples that received a non-abstain prediction.
    pub coverage: f64,
    /// Correct predictions over covered gold examples (NaN when nothing is covered).
    pub accuracy_on_covered: f64,
    pub scored: usize,
}

/// Scores labels against gold. Gold examples without a prediction count as
/// uncovered; an empty overlap is an error.
pub fn score_labels<'a>(
    labels: impl IntoIterator<Item = (&'a str, Option<usize>)>,
    gold: &GoldLabels,
) -> Result<Score> {
    let gold_map = gold.as_map();
    let mut predicted: HashMap<&str, Option<usize>> = HashMap::new();
    for (id, l) in labels {
        if gold_map.contains_key(id) {
            predicted.insert(id, l);
        }
    }
    if predicted.is_empty() || gold.is_empty() {
        return Err(TalcError::IdMismatch(
            "predictions and gold labels share no example ids".into(),
        ));
    }
    let mut covered = 0usize;
    let mut correct = 0usize;
    for (id, truth) in gold.example_ids().iter().zip(gold.labels()) {
        if let Some(Some(l)) = predicted.get(id.as_str()) {
            covered += 1;
            if l == truth {
                correct += 1;
            }
        }
    }
    let total = gold.len() as f64;
    Ok(Score {
        accuracy: correct as f64 / total,
        coverage: covered as f64 / total,
        accuracy_on_covered: if covered == 0 {
            f64::NAN
        } else {
            correct as f64 / covered as f64
        },
        scored: gold.len(),
    })
}

pub fn score_predictions(preds: &[Prediction], gold: &GoldLabels) -> Result<Score> {
    score_labels(
        preds.iter().map(|p| (p.example_id.as_str(), Some(p.label))),
        gold,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let p = vec![Prediction {
            example_id: "a".into(),
            label: 1,
            tie: false,
            posterior: vec![0.25, 0.75],
        }];
        assert_eq!(
            predictions_to_csv(&p, 2),
            "example_id,label,tie_flag,posterior_0,posterior_1\na,1,false,0.25,0.75\n"
        );
        let sp = LabelSpace::with_k(2).unwrap();
        let back = parse_prediction_labels(&predictions_to_csv(&p, 2), &sp).unwrap();
        assert_eq!(back[0].label, Some(1));
    }

    #[test]
    fn scoring() {
        let sp = LabelSpace::with_k(2).unwrap();
        let gold = GoldLabels::new(vec!["a".into(), "b".into()], vec![0, 1], &sp).unwrap();
        let s = score_labels([("a", Some(0)), ("b", Some(1))], &gold).unwrap();
        assert_eq!(s.accuracy, 1.0);
        let s = score_labels([("a", Some(0)), ("b", None)], &gold).unwrap();
        assert_eq!(
            (s.accuracy, s.coverage, s.accuracy_on_covered),
            (0.5, 0.5, 1.0)
        );
        assert!(score_labels([("z", Some(0))], &gold).is_err());
    }
}
