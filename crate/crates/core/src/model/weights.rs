use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TalcError};

/// Per-explanation accuracy and propensity weights plus a fixed class prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub accuracy: Vec<f64>,
    pub propensity: Vec<f64>,
    /// Constant during training.
    pub class_log_prior: Vec<f64>,
    pub l2_lambda: f64,
}

impl ModelWeights {
    pub fn zeros(m: usize, k: usize) -> Self {
        ModelWeights {
            accuracy: vec![0.0; m],
            propensity: vec![0.0; m],
            class_log_prior: vec![0.0; k],
            l2_lambda: 0.0,
        }
    }

    pub fn m(&self) -> usize {
        self.accuracy.len()
    }

    pub fn k(&self) -> usize {
        self.class_log_prior.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.accuracy.len() != self.propensity.len() {
            return Err(TalcError::Dimension(
                "accuracy and propensity weight counts differ".into(),
            ));
        }
        if self.class_log_prior.len() < 2 {
            return Err(TalcError::Dimension(
                "class prior needs k >= 2 entries".into(),
            ));
        }
        let all = self
            .accuracy
            .iter()
            .chain(&self.propensity)
            .chain(&self.class_log_prior);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(TalcError::Config("weights must be finite".into()));
        }
        if self.l2_lambda < 0.0 || !self.l2_lambda.is_finite() {
            return Err(TalcError::Config("l2_lambda must be >= 0".into()));
        }
        Ok(())
    }

    /// Squared norm of the learnable part (accuracy and propensity).
    pub fn squared_norm(&self) -> f64 {
        self.accuracy
            .iter()
            .chain(&self.propensity)
            .map(|v| v * v)
            .sum()
    }

    /// `[accuracy..., propensity...]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.accuracy.clone();
        v.extend_from_slice(&self.propensity);
        v
    }

    /// Inverse of [`ModelWeights::flat`], keeping prior and lambda.
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        let m = self.m();
        assert_eq!(flat.len(), 2 * m);
        ModelWeights {
            accuracy: flat[..m].to_vec(),
            propensity: flat[m..].to_vec(),
            class_log_prior: self.class_log_prior.clone(),
            l2_lambda: self.l2_lambda,
        }
    }
}

/// How EM picks its starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitPolicy {
    /// Start from the moment-matched weights of smoothed majority-vote posteriors.
    MajorityVote {
        epsilon: f64,
    },
    Constant {
        accuracy: f64,
        propensity: f64,
    },
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::MajorityVote { epsilon: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplanationWeight {
    pub acc: f64,
    pub prop: f64,
}

/// On-disk form of fitted weights, keyed by explanation id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsDocument {
    pub weights: IndexMap<String, ExplanationWeight>,
    pub prior: Vec<f64>,
    pub lambda: f64,
    pub init_policy: InitPolicy,
    pub seed: u64,
}

impl WeightsDocument {
    pub fn new(
        weights: &ModelWeights,
        explanation_ids: &[String],
        init_policy: InitPolicy,
        seed: u64,
    ) -> Self {
        let map = explanation_ids
            .iter()
            .zip(weights.accuracy.iter().zip(&weights.propensity))
            .map(|(id, (&acc, &prop))| (id.clone(), ExplanationWeight { acc, prop }))
            .collect();
        WeightsDocument {
            weights: map,
            prior: weights.class_log_prior.clone(),
            lambda: weights.l2_lambda,
            init_policy,
            seed,
        }
    }

    /// Weights ordered to match `explanation_ids`.
    pub fn to_weights(&self, explanation_ids: &[String]) -> Result<ModelWeights> {
        let mut accuracy = Vec::with_capacity(explanation_ids.len());
        let mut propensity = Vec::with_capacity(explanation_ids.len());
        for id in explanation_ids {
            let w = self.weights.get(id).ok_or_else(|| {
                TalcError::IdMismatch(format!("no weights for explanation `{id}`"))
            })?;
            accuracy.push(w.acc);
            propensity.push(w.prop);
        }
        let w = ModelWeights {
            accuracy,
            propensity,
            class_log_prior: self.prior.clone(),
            l2_lambda: self.lambda,
        };
        w.validate()?;
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_round_trip_preserves_column_order() {
        let w = ModelWeights {
            accuracy: vec![0.5, -1.25],
            propensity: vec![2.0, 0.1],
            class_log_prior: vec![0.0, 0.0],
            l2_lambda: 1e-4,
        };
        let ids = vec!["zeta".to_string(), "alpha".to_string()];
        let doc = WeightsDocument::new(&w, &ids, InitPolicy::default(), 42);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.find("zeta").unwrap() < json.find("alpha").unwrap());
        let back: WeightsDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_weights(&ids).unwrap(), w);
        let swapped = vec!["alpha".to_string(), "zeta".to_string()];
        assert_eq!(
            back.to_weights(&swapped).unwrap().accuracy,
            vec![-1.25, 0.5]
        );
        assert!(back.to_weights(&["nope".to_string()]).is_err());
    }

    #[test]
    fn validate_rejects_non_finite() {
        let mut w = ModelWeights::zeros(2, 2);
        w.accuracy[1] = f64::NAN;
        assert!(w.validate().is_err());
    }
}
