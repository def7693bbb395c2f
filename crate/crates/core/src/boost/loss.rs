/// Per-row first and second derivatives of the loss in the raw score.
#[derive(Debug, Clone, PartialEq)]
pub struct GradHess {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `−[y log p + (1−y) log(1−p)]` with `p = sigmoid(raw)`, evaluated
/// without forming `p`.
pub fn logloss(y: u8, raw: f64) -> f64 {
    softplus(raw) - f64::from(y) * raw
}

pub fn mean_logloss(labels: &[u8], raw: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels
        .iter()
        .zip(raw)
        .map(|(&y, &s)| logloss(y, s))
        .sum::<f64>()
        / labels.len() as f64
}

pub fn logloss_grad_hess(labels: &[u8], raw: &[f64]) -> GradHess {
    let (g, h) = labels
        .iter()
        .zip(raw)
        .map(|(&y, &s)| {
            let p = sigmoid(s);
            (p - f64::from(y), p * (1.0 - p))
        })
        .unzip();
    GradHess { g, h }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_zero() {
        let gh = logloss_grad_hess(&[1, 0], &[0.0, 0.0]);
        assert_eq!(gh.g, vec![-0.5, 0.5]);
        assert_eq!(gh.h, vec![0.25, 0.25]);
    }

    #[test]
    fn saturated() {
        let gh = logloss_grad_hess(&[1], &[40.0]);
        assert!(gh.g[0].abs() < 1e-15 && gh.h[0] < 1e-15);
        assert!(logloss(1, 800.0).is_finite() && logloss(0, 800.0).is_finite());
        assert!((logloss(0, 800.0) - 800.0).abs() < 1e-9);
    }
}
