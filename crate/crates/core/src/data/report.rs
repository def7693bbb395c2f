use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::{class_counts, AttackClass, Dataset, SplitTag};

/// Published per-class record counts (normal, DoS, Probe, U2R, R2L).
pub const REFERENCE_TRAIN_COUNTS: [usize; 5] = [67_343, 45_927, 11_656, 52, 995];
pub const REFERENCE_TEST_COUNTS: [usize; 5] = [9_711, 7_458, 2_421, 200, 2_754];
pub const REFERENCE_TRAIN_TOTAL: usize = 125_973;
/// Test total as printed in the published class table; the row entries
/// sum to 22,544, which is also the record count stated in the text.
pub const REFERENCE_TEST_TOTAL_PRINTED: usize = 22_543;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCountCheck {
    pub class: AttackClass,
    pub expected: usize,
    pub observed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCountReport {
    pub split: SplitTag,
    pub n_rows: usize,
    pub normal: usize,
    pub attack: usize,
    pub classes: Vec<ClassCountCheck>,
    pub matches: bool,
    pub notes: Vec<String>,
}

/// Compares a parsed split against the published class table. Mismatches
/// are reported, never raised.
pub fn check_reference_counts(ds: &Dataset) -> SplitCountReport {
    let counts: BTreeMap<AttackClass, usize> = class_counts(ds);
    let reference = match ds.split {
        SplitTag::Train => REFERENCE_TRAIN_COUNTS,
        SplitTag::Test => REFERENCE_TEST_COUNTS,
    };
    let classes: Vec<ClassCountCheck> = AttackClass::ALL
        .iter()
        .zip(reference)
        .map(|(&class, expected)| ClassCountCheck {
            class,
            expected,
            observed: counts.get(&class).copied().unwrap_or(0),
        })
        .collect();
    let matches = classes.iter().all(|c| c.expected == c.observed);
    let mut notes = Vec::new();
    let row_sum: usize = reference.iter().sum();
    match ds.split {
        SplitTag::Train => {
            if ds.n_rows() != REFERENCE_TRAIN_TOTAL {
                notes.push(format!(
                    "row count {} differs from published total {REFERENCE_TRAIN_TOTAL}",
                    ds.n_rows()
                ));
            }
        }
        SplitTag::Test => notes.push(format!(
            "published test total reads {REFERENCE_TEST_TOTAL_PRINTED} but its class entries sum to {row_sum}; validated against the class entries (observed {} rows)",
            ds.n_rows()
        )),
    }
    for c in classes.iter().filter(|c| c.expected != c.observed) {
        notes.push(format!(
            "warning: {} count {} differs from published {}",
            c.class, c.observed, c.expected
        ));
    }
    let attack = ds.positives();
    SplitCountReport {
        split: ds.split,
        n_rows: ds.n_rows(),
        normal: ds.n_rows() - attack,
        attack,
        classes,
        matches,
        notes,
    }
}
