//! Synthetic multi-teacher tasks with known ground truth.
//!
//! Teachers are conditionally independent given the gold label: each cell
//! abstains with the teacher's abstain rate, otherwise emits the gold class
//! with the teacher's accuracy and a uniformly chosen wrong class otherwise.
//! Malicious teachers are generated honestly and then rotated by one class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{GoldLabels, LabelSpace, LabelingMatrix, ABSTAIN};
use crate::error::{Result, TalcError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherProfile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub accuracy: f64,
    #[serde(default)]
    pub abstain_rate: f64,
    #[serde(default)]
    pub malicious: bool,
}

impl TeacherProfile {
    pub fn new(accuracy: f64, abstain_rate: f64) -> Self {
        TeacherProfile {
            id: None,
            accuracy,
            abstain_rate,
            malicious: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("abstain_rate", self.abstain_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(TalcError::Config(format!(
                    "teacher {name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub label_space: LabelSpace,
    pub gold: GoldLabels,
    pub matrix: LabelingMatrix,
    pub profiles: Vec<TeacherProfile>,
    pub seed: u64,
}

/// Rotates the non-abstain labels of column `j` by one class
/// (`0 <-> 1` for binary tasks).
pub fn flip_column(matrix: &LabelingMatrix, j: usize) -> Result<LabelingMatrix> {
    let k = matrix.k() as i32;
    matrix.map_column(j, |c| (c + 1) % k)
}

fn draw_class(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (c, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return c;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub fn generate(
    n: usize,
    k: usize,
    profiles: &[TeacherProfile],
    class_weights: &[f64],
    seed: u64,
) -> Result<SyntheticTask> {
    if n == 0 {
        return Err(TalcError::Config("n must be >= 1".into()));
    }
    if profiles.is_empty() {
        return Err(TalcError::Config(
            "need at least one teacher profile".into(),
        ));
    }
    let label_space = LabelSpace::with_k(k)?;
    if class_weights.len() != k
        || class_weights.iter().any(|w| w.is_nan() || *w < 0.0)
        || (class_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(TalcError::Config(format!(
            "class weights must be {k} non-negative numbers summing to 1"
        )));
    }
    for p in profiles {
        p.validate()?;
    }
    let m = profiles.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold: Vec<usize> = (0..n)
        .map(|_| draw_class(class_weights, rng.gen::<f64>()))
        .collect();
    let mut cells = Vec::with_capacity(n * m);
    for &y in &gold {
        for p in profiles {
            if rng.gen::<f64>() < p.abstain_rate {
                cells.push(ABSTAIN);
            } else if rng.gen::<f64>() < p.accuracy {
                cells.push(y as i32);
            } else {
                let r = rng.gen_range(0..k - 1);
                cells.push(if r >= y { r + 1 } else { r } as i32);
            }
        }
    }
    let example_ids: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let explanation_ids: Vec<String> = profiles
        .iter()
        .enumerate()
        .map(|(j, p)| p.id.clone().unwrap_or_else(|| format!("e{}", j + 1)))
        .collect();
    let mut matrix = LabelingMatrix::new(
        example_ids.clone(),
        explanation_ids,
        cells,
        label_space.clone(),
    )?;
    for (j, p) in profiles.iter().enumerate() {
        if p.malicious {
            matrix = flip_column(&matrix, j)?;
        }
    }
    let gold = GoldLabels::new(example_ids, gold, &label_space)?;
    Ok(SyntheticTask {
        label_space,
        gold,
        matrix,
        profiles: profiles.to_vec(),
        seed,
    })
}

/// Uniform class weights for `k` classes.
pub fn uniform_classes(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::single_explanation;

    #[test]
    fn perfect_teacher_copies_gold() {
        let t = generate(
            200,
            3,
            &[TeacherProfile::new(1.0, 0.0)],
            &uniform_classes(3),
            1,
        )
        .unwrap();
        let col: Vec<i32> = t.matrix.column(0).collect();
        let gold: Vec<i32> = t.gold.labels().iter().map(|&l| l as i32).collect();
        assert_eq!(col, gold);
    }

    #[test]
    fn chance_teacher_is_near_chance() {
        let t = generate(
            4000,
            4,
            &[TeacherProfile::new(0.25, 0.0)],
            &uniform_classes(4),
            3,
        )
        .unwrap();
        let r = single_explanation(&t.matrix, 0, &t.gold).unwrap();
        assert!((r.accuracy - 0.25).abs() < 0.03, "{}", r.accuracy);
    }

    #[test]
    fn concentration_at_n_2000() {
        let t = generate(
            2000,
            2,
            &[TeacherProfile::new(0.8, 0.2)],
            &uniform_classes(2),
            42,
        )
        .unwrap();
        let r = single_explanation(&t.matrix, 0, &t.gold).unwrap();
        assert!((r.accuracy - 0.8).abs() <= 0.03, "accuracy {}", r.accuracy);
        assert!((r.coverage - 0.8).abs() <= 0.03, "coverage {}", r.coverage);
    }

    #[test]
    fn same_seed_same_task() {
        let profiles = [TeacherProfile::new(0.7, 0.1), TeacherProfile::new(0.6, 0.3)];
        let a = generate(300, 3, &profiles, &[0.2, 0.3, 0.5], 9).unwrap();
        let b = generate(300, 3, &profiles, &[0.2, 0.3, 0.5], 9).unwrap();
        assert_eq!(a, b);
        let c = generate(300, 3, &profiles, &[0.2, 0.3, 0.5], 10).unwrap();
        assert_ne!(a.matrix, c.matrix);
    }

    #[test]
    fn invalid_probabilities() {
        let bad = [TeacherProfile::new(1.2, 0.0)];
        assert!(generate(10, 2, &bad, &uniform_classes(2), 0).is_err());
        let ok = [TeacherProfile::new(0.9, 0.0)];
        assert!(generate(10, 2, &ok, &[0.7, 0.7], 0).is_err());
        assert!(generate(0, 2, &ok, &uniform_classes(2), 0).is_err());
    }

    #[test]
    fn flip_examples() {
        let sp = LabelSpace::with_k(2).unwrap();
        let m = LabelingMatrix::from_rows(&[vec![0, 1], vec![1, 1], vec![ABSTAIN, 0]], sp).unwrap();
        let f = flip_column(&m, 0).unwrap();
        assert_eq!(f.column(0).collect::<Vec<_>>(), vec![1, 0, ABSTAIN]);
        assert_eq!(f.column(1).collect::<Vec<_>>(), vec![1, 1, 0]);
        assert_eq!(flip_column(&f, 0).unwrap(), m);

        let sp3 = LabelSpace::with_k(3).unwrap();
        let m3 = LabelingMatrix::from_rows(&[vec![0], vec![1], vec![2]], sp3).unwrap();
        assert_eq!(
            flip_column(&m3, 0).unwrap().column(0).collect::<Vec<_>>(),
            vec![1, 2, 0]
        );
    }

    #[test]
    fn flipping_binary_column_complements_accuracy() {
        let t = generate(
            500,
            2,
            &[TeacherProfile::new(0.7, 0.3)],
            &uniform_classes(2),
            4,
        )
        .unwrap();
        let a = single_explanation(&t.matrix, 0, &t.gold).unwrap().accuracy;
        let flipped = flip_column(&t.matrix, 0).unwrap();
        let b = single_explanation(&flipped, 0, &t.gold).unwrap().accuracy;
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn malicious_profile_is_flipped_after_generation() {
        let honest = [TeacherProfile::new(0.9, 0.1)];
        let evil = [TeacherProfile {
            malicious: true,
            ..TeacherProfile::new(0.9, 0.1)
        }];
        let a = generate(100, 2, &honest, &uniform_classes(2), 5).unwrap();
        let b = generate(100, 2, &evil, &uniform_classes(2), 5).unwrap();
        assert_eq!(flip_column(&a.matrix, 0).unwrap(), b.matrix);
    }
}
