//! Logistic-loss derivatives against central differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treestack::boost::{logloss, logloss_grad_hess};

/// Independent loss in probability space.
fn loss(y: u8, s: f64) -> f64 {
    let p = 1.0 / (1.0 + (-s).exp());
    -(f64::from(y) * p.ln() + (1.0 - f64::from(y)) * (1.0 - p).ln())
}

#[test]
fn first_and_second_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 1e-5;
    for _ in 0..100 {
        let y = u8::from(rng.gen_bool(0.5));
        let s = rng.gen_range(-6.0..6.0);
        let gh = logloss_grad_hess(&[y], &[s]);
        let g_fd = (loss(y, s + eps) - loss(y, s - eps)) / (2.0 * eps);
        assert!(
            (gh.g[0] - g_fd).abs() <= 1e-6 * g_fd.abs().max(1e-3),
            "g y={y} s={s}: {} vs {g_fd}",
            gh.g[0]
        );
        let e2 = 1e-3;
        let h_fd = (loss(y, s + e2) - 2.0 * loss(y, s) + loss(y, s - e2)) / (e2 * e2);
        assert!(
            (gh.h[0] - h_fd).abs() <= 1e-4 * h_fd.abs().max(1e-3),
            "h y={y} s={s}: {} vs {h_fd}",
            gh.h[0]
        );
        assert!((logloss(y, s) - loss(y, s)).abs() < 1e-12);
        assert!(gh.g[0] > -1.0 && gh.g[0] < 1.0 && gh.h[0] > 0.0 && gh.h[0] <= 0.25);
    }
}
