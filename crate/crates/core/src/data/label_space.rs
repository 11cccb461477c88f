use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TalcError};

/// Cell value meaning "this explanation did not assign a label".
pub const ABSTAIN: i32 = -1;

/// CSV spelling of [`ABSTAIN`].
pub const ABSTAIN_TOKEN: &str = "ABSTAIN";

/// The ordered task classes. Class `c` is encoded as the integer `c`;
/// abstention is [`ABSTAIN`] and never a class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLabelSpace", into = "RawLabelSpace")]
pub struct LabelSpace {
    class_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawLabelSpace {
    class_names: Vec<String>,
}

impl TryFrom<RawLabelSpace> for LabelSpace {
    type Error = TalcError;

    fn try_from(raw: RawLabelSpace) -> Result<Self> {
        LabelSpace::new(raw.class_names)
    }
}

impl From<LabelSpace> for RawLabelSpace {
    fn from(space: LabelSpace) -> Self {
        RawLabelSpace {
            class_names: space.class_names,
        }
    }
}

impl LabelSpace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let class_names: Vec<String> = names.into_iter().map(Into::into).collect();
        if class_names.len() < 2 {
            return Err(TalcError::LabelSpace(format!(
                "need at least 2 classes, got {}",
                class_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &class_names {
            if name.is_empty() {
                return Err(TalcError::LabelSpace("empty class name".into()));
            }
            if name == ABSTAIN_TOKEN {
                return Err(TalcError::LabelSpace(format!(
                    "`{ABSTAIN_TOKEN}` is reserved"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(TalcError::LabelSpace(format!("duplicate class `{name}`")));
            }
        }
        Ok(LabelSpace { class_names })
    }

    /// `k` anonymous classes named `0..k`.
    pub fn with_k(k: usize) -> Result<Self> {
        Self::new((0..k).map(|c| c.to_string()))
    }

    pub fn k(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn name(&self, class: usize) -> Option<&str> {
        self.class_names.get(class).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }

    /// True for `ABSTAIN` or any valid class index.
    pub fn is_valid_cell(&self, cell: i32) -> bool {
        cell == ABSTAIN || (cell >= 0 && (cell as usize) < self.k())
    }

    /// Parses a label written either as a class index or as a class name.
    pub fn parse_class(&self, token: &str) -> Result<usize> {
        let token = token.trim();
        if let Ok(v) = token.parse::<i64>() {
            if v < 0 || v as usize >= self.k() {
                return Err(TalcError::ClassOutOfRange {
                    value: v,
                    k: self.k(),
                });
            }
            return Ok(v as usize);
        }
        self.index_of(token)
            .ok_or_else(|| TalcError::LabelSpace(format!("unknown class `{token}`")))
    }
}
