//! Weighted metrics against a scalar re-implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treestack::metrics::{compute_metrics, confusion};

struct Scalar {
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
    class_precision: Vec<f64>,
    class_recall: Vec<f64>,
    class_f1: Vec<f64>,
}

/// Straight loop over rows: counts per class, then support-weighted sums.
fn scalar(labels: &[u8], preds: &[u8], m: usize) -> Scalar {
    let n = labels.len();
    let mut tp = vec![0.0; m];
    let mut fp = vec![0.0; m];
    let mut fnn = vec![0.0; m];
    for k in 0..n {
        let (y, p) = (labels[k] as usize, preds[k] as usize);
        if y == p {
            tp[y] += 1.0;
        } else {
            fp[p] += 1.0;
            fnn[y] += 1.0;
        }
    }
    let mut cp = Vec::new();
    let mut cr = Vec::new();
    let mut cf = Vec::new();
    let (mut wp, mut wr, mut wf, mut support) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..m {
        let s = tp[i] + fnn[i];
        let p = if tp[i] + fp[i] > 0.0 {
            tp[i] / (tp[i] + fp[i])
        } else {
            0.0
        };
        let r = if s > 0.0 { tp[i] / s } else { 0.0 };
        let f = if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        };
        wp += s * p;
        wr += s * r;
        wf += s * f;
        support += s;
        cp.push(p);
        cr.push(r);
        cf.push(f);
    }
    let correct = labels.iter().zip(preds).filter(|(a, b)| a == b).count() as f64;
    Scalar {
        accuracy: correct / n as f64,
        precision: wp / support,
        recall: wr / support,
        f1: wf / support,
        class_precision: cp,
        class_recall: cr,
        class_f1: cf,
    }
}

fn within(v: f64, xs: &[f64], supports: &[u64]) -> bool {
    let present: Vec<f64> = xs
        .iter()
        .zip(supports)
        .filter(|(_, &s)| s > 0)
        .map(|(x, _)| *x)
        .collect();
    let lo = present.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = present.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v >= lo - 1e-12 && v <= hi + 1e-12
}

#[test]
fn matches_scalar_oracle_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let m = if rng.gen_bool(0.6) {
            2
        } else {
            rng.gen_range(3..6)
        };
        let n = rng.gen_range(1..300);
        let skill: f64 = rng.gen_range(0.0..1.0);
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..m) as u8).collect();
        let preds: Vec<u8> = labels
            .iter()
            .map(|&y| {
                if rng.gen_bool(skill) {
                    y
                } else {
                    rng.gen_range(0..m) as u8
                }
            })
            .collect();
        let cc = confusion(&labels, &preds, m).unwrap();
        for c in &cc.classes {
            assert_eq!(c.tp + c.tn + c.fp + c.fn_, n as u64);
        }
        assert_eq!(
            cc.classes.iter().map(|c| c.support()).sum::<u64>(),
            n as u64
        );
        let got = compute_metrics(&cc).unwrap();
        let want = scalar(&labels, &preds, m);
        assert!((got.accuracy - want.accuracy).abs() < 1e-12);
        assert!((got.precision - want.precision).abs() < 1e-12);
        assert!((got.recall - want.recall).abs() < 1e-12);
        assert!((got.f1 - want.f1).abs() < 1e-12);
        for (i, c) in got.per_class.iter().enumerate() {
            assert!((c.precision - want.class_precision[i]).abs() < 1e-12);
            assert!((c.recall - want.class_recall[i]).abs() < 1e-12);
            assert!((c.f1 - want.class_f1[i]).abs() < 1e-12);
        }
        if m == 2 {
            assert!((got.recall - got.accuracy).abs() < 1e-12);
        }
        let supports: Vec<u64> = got.per_class.iter().map(|c| c.support).collect();
        assert!(within(got.precision, &want.class_precision, &supports));
        assert!(within(got.recall, &want.class_recall, &supports));
        assert!(within(got.f1, &want.class_f1, &supports));
        for v in [
            got.accuracy,
            got.precision,
            got.recall,
            got.f1,
            got.false_positive_rate,
        ] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn hand_counted_fixture() {
    let cc = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1], 2).unwrap();
    let c = cc.classes[1];
    assert_eq!((c.tp, c.fn_, c.fp, c.tn), (1, 1, 1, 1));
    let r = compute_metrics(&cc).unwrap();
    for v in [r.accuracy, r.precision, r.recall, r.f1] {
        assert!((v - 0.5).abs() < 1e-15);
    }
    let all = confusion(&[1, 1, 0, 0], &[1, 1, 1, 1], 2).unwrap();
    assert_eq!((all.classes[1].tp, all.classes[1].fp), (2, 2));
    assert!(compute_metrics(&all).unwrap().per_class[0].precision_undefined);
}

#[test]
fn all_attack_predictor_on_test_class_totals() {
    let labels: Vec<u8> = (0..22_544).map(|i| u8::from(i < 12_833)).collect();
    let r = compute_metrics(&confusion(&labels, &vec![1; labels.len()], 2).unwrap()).unwrap();
    assert!((r.accuracy - 12_833.0 / 22_544.0).abs() < 1e-15);
    assert!((r.accuracy - 0.5692).abs() < 5e-5);
}
