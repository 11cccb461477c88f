use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::label_space::LabelSpace;
use crate::error::{Result, TalcError};

/// A natural-language explanation and whatever quality metadata is known for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_metadata: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perplexity_metadata: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    /// Feature text substituted verbatim into prompts,
    /// e.g. `variance equal to 3.6. skewness equal to 8.6`.
    pub serialized_features: String,
}

/// Everything known about a task apart from its labeling matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDescriptor {
    pub task_name: String,
    pub label_space: LabelSpace,
    pub explanations: Vec<ExplanationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example_records: Option<Vec<ExampleRecord>>,
}

impl TaskDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        let task: TaskDescriptor = serde_json::from_str(text)?;
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.explanations {
            if !seen.insert(e.id.as_str()) {
                return Err(TalcError::DuplicateId {
                    kind: "explanation",
                    id: e.id.clone(),
                });
            }
            if let Some(a) = e.accuracy_metadata {
                if !a.is_finite() || !(0.0..=1.0).contains(&a) {
                    return Err(TalcError::Config(format!(
                        "accuracy metadata of `{}` must lie in [0, 1]",
                        e.id
                    )));
                }
            }
            if let Some(p) = e.perplexity_metadata {
                if !p.is_finite() || p <= 0.0 {
                    return Err(TalcError::Config(format!(
                        "perplexity metadata of `{}` must be positive",
                        e.id
                    )));
                }
            }
        }
        if let Some(records) = &self.example_records {
            let mut ids = HashSet::new();
            for r in records {
                if !ids.insert(r.id.as_str()) {
                    return Err(TalcError::DuplicateId {
                        kind: "example",
                        id: r.id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn explanation(&self, id: &str) -> Option<&ExplanationRecord> {
        self.explanations.iter().find(|e| e.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_optional_metadata() {
        let json = r#"{
            "task_name": "banknote",
            "label_space": {"class_names": ["original", "fake"]},
            "explanations": [
                {"id": "e1", "text": "high variance means original", "accuracy_metadata": 0.8},
                {"id": "e2", "text": "low entropy means fake", "perplexity_metadata": 41.2}
            ]
        }"#;
        let t = TaskDescriptor::from_json(json).unwrap();
        assert_eq!(t.explanation("e2").unwrap().perplexity_metadata, Some(41.2));
        assert!(t.example_records.is_none());
    }

    #[test]
    fn rejects_bad_metadata() {
        let json = r#"{"task_name":"t","label_space":{"class_names":["a","b"]},
            "explanations":[{"id":"e1","perplexity_metadata":-3.0}]}"#;
        assert!(TaskDescriptor::from_json(json).is_err());
        let dup = r#"{"task_name":"t","label_space":{"class_names":["a","b"]},
            "explanations":[{"id":"e1"},{"id":"e1"}]}"#;
        assert!(TaskDescriptor::from_json(dup).is_err());
    }
}
