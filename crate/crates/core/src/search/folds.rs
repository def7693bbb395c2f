use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::sha256_hex;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub fold_of_row: Vec<u16>,
    pub seed: u64,
    pub shuffled: bool,
    pub stratified: bool,
}

/// Shuffles each class with `seed`, then deals rows round-robin to folds,
/// negatives first and continuing the same rotation through the positives.
pub fn make_folds(labels: &[u8], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > usize::from(u16::MAX) {
        return Err(Error::InvalidParam(format!(
            "fold count must be in 2..=65535, got {k}"
        )));
    }
    let mut rng = seed::stream(seed, "folds");
    let mut fold_of_row = vec![0u16; labels.len()];
    let mut next = 0usize;
    for class in [0u8, 1] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == class).collect();
        if rows.len() < k {
            return Err(Error::InvalidParam(format!(
                "class {class} has {} rows, fewer than {k} folds",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        for r in rows {
            fold_of_row[r] = (next % k) as u16;
            next += 1;
        }
    }
    if let Some(bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidParam(format!(
            "labels must be 0 or 1, found {bad}"
        )));
    }
    Ok(FoldPlan {
        k,
        fold_of_row,
        seed,
        shuffled: true,
        stratified: true,
    })
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.fold_of_row.len()
    }

    pub fn valid_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| usize::from(self.fold_of_row[r]) == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| usize::from(self.fold_of_row[r]) != fold)
            .collect()
    }

    pub fn hash(&self) -> String {
        let bytes: Vec<u8> = self
            .fold_of_row
            .iter()
            .flat_map(|f| f.to_le_bytes())
            .collect();
        sha256_hex(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisible_case() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 30)).collect();
        let plan = make_folds(&labels, 10, 3).unwrap();
        for f in 0..10 {
            let rows = plan.valid_rows(f);
            assert_eq!(rows.len(), 10);
            assert_eq!(rows.iter().filter(|&&r| labels[r] == 1).count(), 3);
        }
        assert_eq!(plan, make_folds(&labels, 10, 3).unwrap());
    }

    #[test]
    fn tiny() {
        let labels = [1, 1, 0, 0];
        let plan = make_folds(&labels, 2, 0).unwrap();
        for f in 0..2 {
            let rows = plan.valid_rows(f);
            assert_eq!(rows.len(), 2);
            assert_eq!(rows.iter().filter(|&&r| labels[r] == 1).count(), 1);
        }
    }

    #[test]
    fn too_few_members() {
        assert!(make_folds(&[1, 0, 0, 0], 2, 0).is_err());
        assert!(make_folds(&[1, 1, 0, 0], 1, 0).is_err());
    }
}
