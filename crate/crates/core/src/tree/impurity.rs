use crate::error::{Error, Result};

/// Gini impurity `1 − Σ pᵢ²` of a class-proportion vector.
pub fn gini_impurity(class_proportions: &[f64]) -> Result<f64> {
    if let Some(p) = class_proportions.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::InvalidParam(format!(
            "negative class proportion {p}"
        )));
    }
    let sum: f64 = class_proportions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParam(format!(
            "class proportions sum to {sum}, not 1"
        )));
    }
    Ok(1.0 - class_proportions.iter().map(|p| p * p).sum::<f64>())
}

/// Gini impurity from raw class counts; 0 for an empty node.
pub(crate) fn gini_from_counts(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(gini_impurity(&[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[0.5, 0.5]).unwrap(), 0.5);
        assert!((gini_impurity(&[0.25, 0.75]).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gini_impurity(&[-0.1, 1.1]).is_err());
        assert!(gini_impurity(&[0.2, 0.2]).is_err());
    }
}
