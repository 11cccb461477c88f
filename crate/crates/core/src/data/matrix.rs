use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::label_space::{LabelSpace, ABSTAIN, ABSTAIN_TOKEN};
use crate::error::{Result, TalcError};

const ID_HEADER: &str = "example_id";

fn check_unique(ids: &[String], kind: &'static str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(TalcError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

/// An n x m grid of hard pseudo-labels: one row per example, one column per
/// explanation. Cells are class indices or [`ABSTAIN`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabelingMatrix {
    example_ids: Vec<String>,
    explanation_ids: Vec<String>,
    cells: Vec<i32>,
    label_space: LabelSpace,
}

impl LabelingMatrix {
    /// Builds a matrix from row-major cells.
    pub fn new(
        example_ids: Vec<String>,
        explanation_ids: Vec<String>,
        cells: Vec<i32>,
        label_space: LabelSpace,
    ) -> Result<Self> {
        if example_ids.is_empty() || explanation_ids.is_empty() {
            return Err(TalcError::EmptyMatrix);
        }
        check_unique(&example_ids, "example")?;
        check_unique(&explanation_ids, "explanation")?;
        if cells.len() != example_ids.len() * explanation_ids.len() {
            return Err(TalcError::Dimension(format!(
                "{} cells for a {}x{} matrix",
                cells.len(),
                example_ids.len(),
                explanation_ids.len()
            )));
        }
        if let Some(&bad) = cells.iter().find(|&&c| !label_space.is_valid_cell(c)) {
            return Err(TalcError::ClassOutOfRange {
                value: bad as i64,
                k: label_space.k(),
            });
        }
        Ok(LabelingMatrix {
            example_ids,
            explanation_ids,
            cells,
            label_space,
        })
    }

    /// Builds a matrix from rows, generating ids `x0..` and `e0..`.
    pub fn from_rows(rows: &[Vec<i32>], label_space: LabelSpace) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(TalcError::Dimension("ragged rows".into()));
        }
        LabelingMatrix::new(
            (0..rows.len()).map(|i| format!("x{i}")).collect(),
            (0..m).map(|j| format!("e{j}")).collect(),
            rows.concat(),
            label_space,
        )
    }

    pub fn n(&self) -> usize {
        self.example_ids.len()
    }

    pub fn m(&self) -> usize {
        self.explanation_ids.len()
    }

    pub fn k(&self) -> usize {
        self.label_space.k()
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn explanation_ids(&self) -> &[String] {
        &self.explanation_ids
    }

    pub fn cells(&self) -> &[i32] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[i32] {
        let m = self.m();
        &self.cells[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i32]> {
        self.cells.chunks_exact(self.m())
    }

    pub fn cell(&self, i: usize, j: usize) -> i32 {
        self.cells[i * self.m() + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = i32> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn explanation_index(&self, id: &str) -> Option<usize> {
        self.explanation_ids.iter().position(|e| e == id)
    }

    /// Number of non-abstain cells in column `j`.
    pub fn column_coverage_count(&self, j: usize) -> usize {
        self.column(j).filter(|&c| c != ABSTAIN).count()
    }

    pub fn has_any_label(&self) -> bool {
        self.cells.iter().any(|&c| c != ABSTAIN)
    }

    /// Rows at the given indices, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut ids = Vec::with_capacity(indices.len());
        let mut cells = Vec::with_capacity(indices.len() * self.m());
        for &i in indices {
            if i >= self.n() {
                return Err(TalcError::Dimension(format!("row {i} out of range")));
            }
            ids.push(self.example_ids[i].clone());
            cells.extend_from_slice(self.row(i));
        }
        LabelingMatrix::new(
            ids,
            self.explanation_ids.clone(),
            cells,
            self.label_space.clone(),
        )
    }

    /// Columns at the given indices, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&j) = indices.iter().find(|&&j| j >= self.m()) {
            return Err(TalcError::Dimension(format!("column {j} out of range")));
        }
        let cells = self
            .rows()
            .flat_map(|row| indices.iter().map(move |&j| row[j]))
            .collect();
        LabelingMatrix::new(
            self.example_ids.clone(),
            indices
                .iter()
                .map(|&j| self.explanation_ids[j].clone())
                .collect(),
            cells,
            self.label_space.clone(),
        )
    }

    /// Appends the columns of `other`, which must share example ids.
    pub fn append_columns(&self, other: &LabelingMatrix) -> Result<Self> {
        if self.example_ids != other.example_ids {
            return Err(TalcError::IdMismatch("example ids differ".into()));
        }
        if self.label_space != other.label_space {
            return Err(TalcError::Dimension("label spaces differ".into()));
        }
        let mut ids = self.explanation_ids.clone();
        ids.extend(other.explanation_ids.iter().cloned());
        let cells = self
            .rows()
            .zip(other.rows())
            .flat_map(|(a, b)| a.iter().chain(b).copied())
            .collect();
        LabelingMatrix::new(
            self.example_ids.clone(),
            ids,
            cells,
            self.label_space.clone(),
        )
    }

    /// Applies `f` to the non-abstain cells of column `j`.
    pub fn map_column(&self, j: usize, f: impl Fn(i32) -> i32) -> Result<Self> {
        if j >= self.m() {
            return Err(TalcError::Dimension(format!("column {j} out of range")));
        }
        let m = self.m();
        let mut cells = self.cells.clone();
        for row in cells.chunks_exact_mut(m) {
            if row[j] != ABSTAIN {
                row[j] = f(row[j]);
            }
        }
        LabelingMatrix::new(
            self.example_ids.clone(),
            self.explanation_ids.clone(),
            cells,
            self.label_space.clone(),
        )
    }

    /// A copy with every cell of the given rows set to abstain.
    pub fn blank_rows(&self, rows: &[usize]) -> Self {
        let mut out = self.clone();
        let m = self.m();
        for &i in rows {
            out.cells[i * m..(i + 1) * m].fill(ABSTAIN);
        }
        out
    }

    /// Parses the `example_id,<expl_1>,...` CSV format.
    pub fn parse_csv(text: &str, label_space: &LabelSpace) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            Some(rec) => rec?,
            None => return Err(TalcError::EmptyMatrix),
        };
        if header.get(0) != Some(ID_HEADER) {
            return Err(TalcError::Parse {
                line: 1,
                msg: format!("first header column must be `{ID_HEADER}`"),
            });
        }
        let explanation_ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let m = explanation_ids.len();
        let mut example_ids = Vec::new();
        let mut cells = Vec::new();
        for rec in records {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() == 1 && rec.get(0) == Some("") {
                continue;
            }
            if rec.len() != m + 1 {
                return Err(TalcError::Parse {
                    line,
                    msg: format!("ragged row: expected {} fields, got {}", m + 1, rec.len()),
                });
            }
            example_ids.push(rec[0].to_string());
            for tok in rec.iter().skip(1) {
                cells.push(parse_cell(tok, label_space, line)?);
            }
        }
        LabelingMatrix::new(example_ids, explanation_ids, cells, label_space.clone())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let header =
            std::iter::once(ID_HEADER).chain(self.explanation_ids.iter().map(String::as_str));
        w.write_record(header).expect("write to Vec");
        for (id, row) in self.example_ids.iter().zip(self.rows()) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(id.clone());
            rec.extend(row.iter().map(|&c| format_cell(c)));
            w.write_record(&rec).expect("write to Vec");
        }
        String::from_utf8(w.into_inner().expect("flush Vec")).expect("utf8 csv")
    }
}

fn parse_cell(tok: &str, space: &LabelSpace, line: usize) -> Result<i32> {
    if tok == ABSTAIN_TOKEN {
        return Ok(ABSTAIN);
    }
    let v: i64 = tok.parse().map_err(|_| TalcError::Parse {
        line,
        msg: format!("bad cell `{tok}`"),
    })?;
    if v < 0 || v as usize >= space.k() {
        return Err(TalcError::ClassOutOfRange {
            value: v,
            k: space.k(),
        });
    }
    Ok(v as i32)
}

pub(crate) fn format_cell(c: i32) -> String {
    if c == ABSTAIN {
        ABSTAIN_TOKEN.to_string()
    } else {
        c.to_string()
    }
}

/// Index of the largest entry; ties go to the lowest index. The flag is
/// set when more than one entry attains the maximum.
pub fn argmax_lowest(values: &[f64]) -> (usize, bool) {
    let mut best = 0;
    let mut tie = false;
    for (c, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = c;
            tie = false;
        } else if v == values[best] {
            tie = true;
        }
    }
    (best, tie)
}

/// n x m grid of per-explanation class distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSoftMatrix", into = "RawSoftMatrix")]
pub struct SoftLabelingMatrix {
    example_ids: Vec<String>,
    explanation_ids: Vec<String>,
    probs: Vec<f64>,
    label_space: LabelSpace,
}

/// JSON layout: `cells[i][j]` is the distribution of explanation j on example i.
#[derive(Serialize, Deserialize)]
struct RawSoftMatrix {
    label_space: LabelSpace,
    example_ids: Vec<String>,
    explanation_ids: Vec<String>,
    cells: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<RawSoftMatrix> for SoftLabelingMatrix {
    type Error = TalcError;

    fn try_from(raw: RawSoftMatrix) -> Result<Self> {
        let k = raw.label_space.k();
        let mut probs = Vec::new();
        for (i, row) in raw.cells.iter().enumerate() {
            if row.len() != raw.explanation_ids.len() {
                return Err(TalcError::Dimension(format!("soft row {i} is ragged")));
            }
            for v in row {
                if v.len() != k {
                    return Err(TalcError::Dimension(format!(
                        "soft row {i}: vector of length {} for k = {k}",
                        v.len()
                    )));
                }
                probs.extend_from_slice(v);
            }
        }
        if raw.cells.len() != raw.example_ids.len() {
            return Err(TalcError::Dimension("soft row count".into()));
        }
        SoftLabelingMatrix::new(raw.example_ids, raw.explanation_ids, probs, raw.label_space)
    }
}

impl From<SoftLabelingMatrix> for RawSoftMatrix {
    fn from(s: SoftLabelingMatrix) -> Self {
        let k = s.k();
        let m = s.m();
        let cells = s
            .probs
            .chunks_exact(m * k)
            .map(|row| row.chunks_exact(k).map(<[f64]>::to_vec).collect())
            .collect();
        RawSoftMatrix {
            label_space: s.label_space,
            example_ids: s.example_ids,
            explanation_ids: s.explanation_ids,
            cells,
        }
    }
}

impl SoftLabelingMatrix {
    /// `probs` is laid out as [example][explanation][class].
    pub fn new(
        example_ids: Vec<String>,
        explanation_ids: Vec<String>,
        probs: Vec<f64>,
        label_space: LabelSpace,
    ) -> Result<Self> {
        if example_ids.is_empty() || explanation_ids.is_empty() {
            return Err(TalcError::EmptyMatrix);
        }
        check_unique(&example_ids, "example")?;
        check_unique(&explanation_ids, "explanation")?;
        let k = label_space.k();
        if probs.len() != example_ids.len() * explanation_ids.len() * k {
            return Err(TalcError::Dimension("soft matrix size".into()));
        }
        for (idx, v) in probs.chunks_exact(k).enumerate() {
            let sum: f64 = v.iter().sum();
            if v.iter().any(|&p| p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-9 {
                return Err(TalcError::Dimension(format!(
                    "cell ({}, {}) is not a probability vector",
                    idx / explanation_ids.len(),
                    idx % explanation_ids.len()
                )));
            }
        }
        Ok(SoftLabelingMatrix {
            example_ids,
            explanation_ids,
            probs,
            label_space,
        })
    }

    pub fn n(&self) -> usize {
        self.example_ids.len()
    }

    pub fn m(&self) -> usize {
        self.explanation_ids.len()
    }

    pub fn k(&self) -> usize {
        self.label_space.k()
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn explanation_ids(&self) -> &[String] {
        &self.explanation_ids
    }

    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let k = self.k();
        let start = (i * self.m() + j) * k;
        &self.probs[start..start + k]
    }

    /// Argmax of each cell, or abstain where the top probability is below `tau`.
    pub fn harden(&self, tau: f64) -> LabelingMatrix {
        let cells = self
            .probs
            .chunks_exact(self.k())
            .map(|v| {
                let (best, _) = argmax_lowest(v);
                if v[best] >= tau {
                    best as i32
                } else {
                    ABSTAIN
                }
            })
            .collect();
        LabelingMatrix::new(
            self.example_ids.clone(),
            self.explanation_ids.clone(),
            cells,
            self.label_space.clone(),
        )
        .expect("hardened cells are valid by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(n: usize) -> LabelSpace {
        LabelSpace::with_k(n).unwrap()
    }

    #[test]
    fn minimal_file() {
        let m = LabelingMatrix::parse_csv("example_id,e1\nx1,0", &k(2)).unwrap();
        assert_eq!((m.n(), m.m()), (1, 1));
        assert_eq!(m.cell(0, 0), 0);
    }

    #[test]
    fn abstain_token_maps_to_sentinel() {
        let m = LabelingMatrix::parse_csv("example_id,e1,e2\nx1,ABSTAIN,1\n", &k(2)).unwrap();
        assert_eq!(m.row(0), &[ABSTAIN, 1]);
    }

    #[test]
    fn out_of_range_cell() {
        let err = LabelingMatrix::parse_csv("example_id,e1\nx1,5\n", &k(3)).unwrap_err();
        assert!(
            err.to_string().contains("class index out of range"),
            "{err}"
        );
    }

    #[test]
    fn structural_errors() {
        let sp = k(2);
        assert!(matches!(
            LabelingMatrix::parse_csv("example_id,e1,e1\nx1,0,0\n", &sp),
            Err(TalcError::DuplicateId { .. })
        ));
        assert!(matches!(
            LabelingMatrix::parse_csv("example_id,e1\nx1,0\nx1,1\n", &sp),
            Err(TalcError::DuplicateId { .. })
        ));
        assert!(matches!(
            LabelingMatrix::parse_csv("example_id,e1,e2\nx1,0\n", &sp),
            Err(TalcError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            LabelingMatrix::parse_csv("example_id,e1\n", &sp),
            Err(TalcError::EmptyMatrix)
        ));
        assert!(matches!(
            LabelingMatrix::parse_csv("", &sp),
            Err(TalcError::EmptyMatrix)
        ));
        assert!(LabelingMatrix::parse_csv("id,e1\nx1,0\n", &sp).is_err());
        assert!(LabelingMatrix::parse_csv("example_id,e1\nx1,zero\n", &sp).is_err());
    }

    #[test]
    fn row_order_preserved() {
        let m = LabelingMatrix::parse_csv("example_id,a\nz,0\ny,1\nx,0\n", &k(2)).unwrap();
        assert_eq!(m.example_ids(), &["z", "y", "x"]);
    }

    #[test]
    fn harden_examples() {
        let soft = SoftLabelingMatrix::new(
            vec!["x".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.6, 0.4, 0.5, 0.5, 0.55, 0.45],
            k(2),
        )
        .unwrap();
        assert_eq!(soft.harden(0.0).row(0), &[0, 0, 0]);
        assert_eq!(soft.harden(0.6).row(0), &[0, ABSTAIN, ABSTAIN]);
    }

    #[test]
    fn soft_rejects_non_distributions() {
        let bad = SoftLabelingMatrix::new(vec!["x".into()], vec!["a".into()], vec![0.6, 0.6], k(2));
        assert!(bad.is_err());
        let neg =
            SoftLabelingMatrix::new(vec!["x".into()], vec!["a".into()], vec![1.5, -0.5], k(2));
        assert!(neg.is_err());
    }

    #[test]
    fn soft_json_layout() {
        let json = r#"{"label_space":{"class_names":["a","b"]},"example_ids":["x"],
            "explanation_ids":["e1","e2"],"cells":[[[0.2,0.8],[1.0,0.0]]]}"#;
        let soft: SoftLabelingMatrix = serde_json::from_str(json).unwrap();
        assert_eq!(soft.cell(0, 0), &[0.2, 0.8]);
        assert_eq!(soft.cell(0, 1), &[1.0, 0.0]);
        let back = serde_json::to_string(&soft).unwrap();
        assert_eq!(
            serde_json::from_str::<SoftLabelingMatrix>(&back).unwrap(),
            soft
        );
    }

    fn arb_matrix() -> impl Strategy<Value = (usize, Vec<Vec<i32>>)> {
        (2usize..5, 1usize..6, 1usize..6).prop_flat_map(|(k, n, m)| {
            let cell = -1i32..k as i32;
            (
                Just(k),
                prop::collection::vec(prop::collection::vec(cell, m), n),
            )
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip((k_, rows) in arb_matrix()) {
            let m = LabelingMatrix::from_rows(&rows, k(k_)).unwrap();
            let text = m.to_csv();
            let back = LabelingMatrix::parse_csv(&text, &k(k_)).unwrap();
            prop_assert_eq!(&back, &m);
            let out = back.to_csv();
            prop_assert_eq!(out.trim_end(), text.trim_end());
        }

        #[test]
        fn harden_without_threshold_never_abstains(
            raw in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..20)
        ) {
            let mut probs = Vec::new();
            for v in &raw {
                let s: f64 = v.iter().sum::<f64>() + 1e-3;
                let a = (v[0] + 1e-3) / s;
                let b = v[1] / s;
                probs.extend([a, b, (1.0 - a - b).max(0.0)]);
            }
            let ids = (0..raw.len()).map(|i| format!("x{i}")).collect();
            let soft = SoftLabelingMatrix::new(ids, vec!["e".into()], probs, k(3)).unwrap();
            prop_assert!(soft.harden(0.0).cells().iter().all(|&c| c != ABSTAIN));
        }
    }
}
