use std::collections::{HashMap, HashSet};

use super::label_space::LabelSpace;
use super::matrix::LabelingMatrix;
use crate::error::{Result, TalcError};

/// Ground-truth labels, used only for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldLabels {
    example_ids: Vec<String>,
    labels: Vec<usize>,
}

impl GoldLabels {
    pub fn new(example_ids: Vec<String>, labels: Vec<usize>, space: &LabelSpace) -> Result<Self> {
        if example_ids.len() != labels.len() {
            return Err(TalcError::Dimension(
                "gold ids and labels differ in length".into(),
            ));
        }
        let mut seen = HashSet::new();
        for id in &example_ids {
            if !seen.insert(id.as_str()) {
                return Err(TalcError::DuplicateId {
                    kind: "gold example",
                    id: id.clone(),
                });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= space.k()) {
            return Err(TalcError::ClassOutOfRange {
                value: bad as i64,
                k: space.k(),
            });
        }
        Ok(GoldLabels {
            example_ids,
            labels,
        })
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_map(&self) -> HashMap<&str, usize> {
        self.example_ids
            .iter()
            .map(String::as_str)
            .zip(self.labels.iter().copied())
            .collect()
    }

    /// Gold label for every matrix row, in row order. Fails if any row lacks one.
    pub fn aligned_to(&self, matrix: &LabelingMatrix) -> Result<Vec<usize>> {
        let map = self.as_map();
        matrix
            .example_ids()
            .iter()
            .map(|id| {
                map.get(id.as_str())
                    .copied()
                    .ok_or_else(|| TalcError::IdMismatch(format!("no gold label for `{id}`")))
            })
            .collect()
    }

    /// Parses `example_id,label`; labels may be indices or class names.
    pub fn parse_csv(text: &str, space: &LabelSpace) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "example_id" {
            return Err(TalcError::Parse {
                line: 1,
                msg: "gold header must be `example_id,label`".into(),
            });
        }
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 2 {
                return Err(TalcError::Parse {
                    line,
                    msg: "expected 2 fields".into(),
                });
            }
            ids.push(rec[0].to_string());
            labels.push(space.parse_class(&rec[1])?);
        }
        GoldLabels::new(ids, labels, space)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("example_id,label\n");
        for (id, l) in self.example_ids.iter().zip(&self.labels) {
            out.push_str(&format!("{id},{l}\n"));
        }
        out
    }
}
