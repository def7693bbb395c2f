use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code reserved in every vocabulary for categories unseen at vocabulary
/// construction time.
pub const UNKNOWN_CODE: u32 = 0;
pub const UNKNOWN_TOKEN: &str = "<unknown>";

/// The five traffic classes of NSL-KDD after attack-name grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttackClass {
    #[serde(rename = "normal")]
    Normal,
    DoS,
    Probe,
    U2R,
    R2L,
}

impl AttackClass {
    pub const ALL: [AttackClass; 5] = [
        AttackClass::Normal,
        AttackClass::DoS,
        AttackClass::Probe,
        AttackClass::U2R,
        AttackClass::R2L,
    ];

    /// 0 = Normal, 1 = Attack.
    pub fn binary(self) -> u8 {
        u8::from(self != AttackClass::Normal)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(AttackClass::Normal),
            "DoS" => Some(AttackClass::DoS),
            "Probe" => Some(AttackClass::Probe),
            "U2R" => Some(AttackClass::U2R),
            "R2L" => Some(AttackClass::R2L),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttackClass::Normal => "normal",
            AttackClass::DoS => "DoS",
            AttackClass::Probe => "Probe",
            AttackClass::U2R => "U2R",
            AttackClass::R2L => "R2L",
        }
    }
}

impl fmt::Display for AttackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
}

/// Category strings of one categorical feature. Entry 0 is always the
/// reserved unknown token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab(Vec<String>);

impl Vocab {
    pub fn new() -> Self {
        Vocab(vec![UNKNOWN_TOKEN.to_string()])
    }

    pub fn from_categories<I, S>(categories: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Vocab::new();
        for c in categories {
            v.intern(&c.into());
        }
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of real categories, excluding the reserved unknown entry.
    pub fn cardinality(&self) -> usize {
        self.0.len() - 1
    }

    pub fn code_of(&self, s: &str) -> Option<u32> {
        self.0.iter().position(|c| c == s).map(|p| p as u32)
    }

    pub fn intern(&mut self, s: &str) -> u32 {
        match self.code_of(s) {
            Some(c) => c,
            None => {
                self.0.push(s.to_string());
                (self.0.len() - 1) as u32
            }
        }
    }

    pub fn decode(&self, code: u32) -> Option<&str> {
        self.0.get(code as usize).map(String::as_str)
    }

    pub fn categories(&self) -> &[String] {
        &self.0
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::new()
    }
}

/// Shared vocabularies keyed by feature name, built from the training file
/// and reused when parsing the test file.
pub type SharedVocab = BTreeMap<String, Vocab>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnData {
    Numeric {
        values: Vec<f64>,
    },
    Categorical {
        codes: Vec<u32>,
        vocab: Vocab,
    },
    /// Categorical codes passed through and treated as ordered integers.
    Ordinal {
        codes: Vec<u32>,
        vocab: Vocab,
    },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric { values } => values.len(),
            ColumnData::Categorical { codes, .. } | ColumnData::Ordinal { codes, .. } => {
                codes.len()
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, ColumnData::Categorical { .. })
    }

    /// Cell value as a real number (codes are returned as-is).
    pub fn value(&self, row: usize) -> f64 {
        match self {
            ColumnData::Numeric { values } => values[row],
            ColumnData::Categorical { codes, .. } | ColumnData::Ordinal { codes, .. } => {
                f64::from(codes[row])
            }
        }
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric { values } => ColumnData::Numeric {
                values: rows.iter().map(|&r| values[r]).collect(),
            },
            ColumnData::Categorical { codes, vocab } => ColumnData::Categorical {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                vocab: vocab.clone(),
            },
            ColumnData::Ordinal { codes, vocab } => ColumnData::Ordinal {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                vocab: vocab.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Numeric { values },
        }
    }

    pub fn categorical(name: impl Into<String>, codes: Vec<u32>, vocab: Vocab) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Categorical { codes, vocab },
        }
    }
}

/// Typed, column-major feature table with binary labels. Immutable once
/// built; learners only ever borrow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<Column>,
    pub labels: Vec<u8>,
    pub raw_classes: Vec<AttackClass>,
    pub difficulty: Option<Vec<u32>>,
    pub split: SplitTag,
}

impl Dataset {
    /// Builds a dataset and derives binary labels from the raw classes.
    pub fn new(
        columns: Vec<Column>,
        raw_classes: Vec<AttackClass>,
        split: SplitTag,
    ) -> Result<Self> {
        let labels = raw_classes.iter().map(|c| c.binary()).collect();
        let ds = Dataset {
            columns,
            labels,
            raw_classes,
            difficulty: None,
            split,
        };
        ds.check()?;
        Ok(ds)
    }

    /// Convenience constructor for binary fixtures: label 0 becomes `normal`,
    /// label 1 becomes `DoS`.
    pub fn from_binary(columns: Vec<Column>, labels: &[u8]) -> Result<Self> {
        let raw = labels
            .iter()
            .map(|&l| {
                if l == 0 {
                    AttackClass::Normal
                } else {
                    AttackClass::DoS
                }
            })
            .collect();
        Dataset::new(columns, raw, SplitTag::Train)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Vocabularies of all categorical (or ordinal-coded) columns.
    pub fn vocab(&self) -> SharedVocab {
        self.columns
            .iter()
            .filter_map(|c| match &c.data {
                ColumnData::Categorical { vocab, .. } | ColumnData::Ordinal { vocab, .. } => {
                    Some((c.name.clone(), vocab.clone()))
                }
                ColumnData::Numeric { .. } => None,
            })
            .collect()
    }

    /// Checks the structural invariants: column lengths, code ranges, labels.
    pub fn check(&self) -> Result<()> {
        let n = self.labels.len();
        if self.raw_classes.len() != n {
            return Err(Error::Schema(format!(
                "raw class count {} != label count {n}",
                self.raw_classes.len()
            )));
        }
        for c in &self.columns {
            if c.data.len() != n {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {n}",
                    c.name,
                    c.data.len()
                )));
            }
            if let ColumnData::Categorical { codes, vocab } | ColumnData::Ordinal { codes, vocab } =
                &c.data
            {
                if let Some(bad) = codes.iter().find(|&&code| code as usize >= vocab.len()) {
                    return Err(Error::Schema(format!(
                        "column `{}` has code {bad} outside vocabulary of {}",
                        c.name,
                        vocab.len()
                    )));
                }
            }
        }
        if let Some(l) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Schema(format!("label {l} is not binary")));
        }
        if let Some(d) = &self.difficulty {
            if d.len() != n {
                return Err(Error::Schema("difficulty column length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Row subset in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            raw_classes: rows.iter().map(|&r| self.raw_classes[r]).collect(),
            difficulty: self
                .difficulty
                .as_ref()
                .map(|d| rows.iter().map(|&r| d[r]).collect()),
            split: self.split,
        }
    }
}

/// Exact per-class record counts.
pub fn class_counts(ds: &Dataset) -> BTreeMap<AttackClass, usize> {
    let mut counts = BTreeMap::new();
    for c in &ds.raw_classes {
        *counts.entry(*c).or_insert(0) += 1;
    }
    counts
}

/// Re-derives binary labels from the raw classes (0 = normal, 1 = attack).
pub fn binarize(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    out.labels = ds.raw_classes.iter().map(|c| c.binary()).collect();
    out
}
