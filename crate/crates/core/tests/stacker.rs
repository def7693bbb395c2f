//! Out-of-fold stacking, meta-learner and blend properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treestack::boost::BoostParams;
use treestack::data::{Column, Dataset};
use treestack::forest::ForestParams;
use treestack::learner::{fit_learner, FitOptions, LearnerSpec};
use treestack::metrics::MetricId;
use treestack::search::{cross_validate, make_folds};
use treestack::stack::{
    build_oof, cross_fit_meta, fit_logistic, fit_meta, fit_stack, greedy_blend, predict_stacked,
    BaseMember, EnsembleBlend, MemberRef, MetaLearner, StackConfig, StackedModel, META_ID,
};

/// Mean logloss with 0·ln 0 = 0, straight from the definition.
fn logloss_oracle(labels: &[u8], probs: &[f64]) -> f64 {
    let term = |c: f64, p: f64| if c == 0.0 { 0.0 } else { -c * p.ln() };
    labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| term(f64::from(y), p) + term(1.0 - f64::from(y), 1.0 - p))
        .sum::<f64>()
        / labels.len() as f64
}

fn noisy(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        let flip = rng.gen_bool(0.1);
        labels.push(u8::from((a + 0.5 * b > 0.0) != flip));
        x1.push(a);
        x2.push(b);
    }
    Dataset::from_binary(
        vec![Column::numeric("a", x1), Column::numeric("b", x2)],
        &labels,
    )
    .unwrap()
}

fn small_forest() -> LearnerSpec {
    LearnerSpec::Forest(ForestParams {
        n_trees: 8,
        min_samples_split: 4,
        ..ForestParams::default()
    })
}

fn small_boost() -> LearnerSpec {
    let mut p = BoostParams::lgbm();
    p.n_rounds = 15;
    LearnerSpec::Boost(p)
}

fn member(id: &str, spec: LearnerSpec, seed: u64) -> BaseMember {
    BaseMember {
        id: id.into(),
        spec,
        seed,
    }
}

#[test]
fn constant_model_gives_constant_column() {
    let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 2 == 0)).collect();
    let ds = Dataset::from_binary(
        vec![Column::numeric("x", (0..40).map(f64::from).collect())],
        &labels,
    )
    .unwrap();
    let folds = make_folds(&ds.labels, 5, 3).unwrap();
    let oof = build_oof(
        &ds,
        &[member("prior", LearnerSpec::Prior, 1)],
        &folds,
        FitOptions::default(),
    )
    .unwrap();
    assert!(oof.columns[0].iter().all(|&p| p == 0.5));
    assert_eq!(oof.fold_hash, folds.hash());
}

#[test]
fn columns_match_individual_cross_validation() {
    let ds = noisy(240, 1);
    let folds = make_folds(&ds.labels, 4, 9).unwrap();
    let members = [
        member("forest", small_forest(), 11),
        member("lgbm", small_boost(), 12),
        member("forest_again", small_forest(), 11),
    ];
    let oof = build_oof(&ds, &members, &folds, FitOptions::default()).unwrap();
    assert_eq!(oof.columns[0], oof.columns[2]);
    for (j, m) in members.iter().enumerate() {
        let cv = cross_validate(
            &ds,
            &m.spec,
            &folds,
            MetricId::Logloss,
            FitOptions::default(),
            m.seed,
        )
        .unwrap();
        assert_eq!(cv.oof.unwrap(), oof.columns[j], "{}", m.id);
    }
    assert!(oof
        .columns
        .iter()
        .flatten()
        .all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn perfect_column_is_recovered_without_penalty() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let labels: Vec<u8> = (0..300).map(|_| u8::from(rng.gen_bool(0.4))).collect();
    let perfect: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
    let other: Vec<f64> = (0..300).map(|_| rng.gen_range(0.0..1.0)).collect();
    let base = logloss_oracle(&labels, &perfect);
    let ds = Dataset::from_binary(vec![Column::numeric("x", other.clone())], &labels).unwrap();
    let folds = make_folds(&ds.labels, 5, 1).unwrap();
    let oof = treestack::stack::OofMatrix {
        model_ids: vec!["perfect".into(), "other".into()],
        columns: vec![perfect, other],
        n_rows: 300,
        fold_hash: folds.hash(),
    };
    let meta_oof = cross_fit_meta(&oof, &labels, &folds, 0.0).unwrap();
    let meta = logloss_oracle(&labels, &meta_oof);
    assert!(meta <= base + 1e-6, "meta {meta} vs column {base}");
}

#[test]
fn penalty_shrinks_weights_on_random_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 1000;
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
    let cols: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let norm = |m: &MetaLearner| m.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let free = fit_meta(&cols, &labels, 0.0).unwrap();
    let penalised = fit_meta(&cols, &labels, 1e-3).unwrap();
    assert!(free.converged && penalised.converged);
    assert!(
        norm(&penalised) < norm(&free),
        "{} vs {}",
        norm(&penalised),
        norm(&free)
    );
}

#[test]
fn duplicate_columns_match_single_column_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 400;
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let labels: Vec<u8> = c.iter().map(|&p| u8::from(rng.gen_bool(p))).collect();
    let probe: Vec<f64> = (0..=20).map(|i| f64::from(i) / 20.0).collect();
    let dup = fit_meta(&[c.clone(), c.clone()], &labels, 0.0).unwrap();
    let single = fit_logistic(&[c.clone()], &labels, 0.0).unwrap();
    for &x in &probe {
        assert!((dup.predict(&[x, x]) - single.predict(&[x])).abs() < 1e-6);
    }
    // Splitting one weight evenly over two copies halves its L2 penalty.
    let dup = fit_meta(&[c.clone(), c.clone()], &labels, 0.1).unwrap();
    let single = fit_logistic(&[c], &labels, 0.05).unwrap();
    for &x in &probe {
        assert!((dup.predict(&[x, x]) - single.predict(&[x])).abs() < 1e-6);
    }
    assert!((dup.weights[0] - dup.weights[1]).abs() < 1e-6);
}

#[test]
fn blend_prefers_perfect_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let labels: Vec<u8> = (0..200).map(|_| u8::from(rng.gen_bool(0.5))).collect();
    let perfect: Vec<f64> = labels.iter().map(|&y| 0.1 + 0.8 * f64::from(y)).collect();
    let random: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
    for metric in [MetricId::WeightedF1, MetricId::Accuracy, MetricId::Logloss] {
        let ids = vec!["random".to_string(), "perfect".to_string()];
        let b = greedy_blend(
            &ids,
            &[random.clone(), perfect.clone()],
            &labels,
            metric,
            20,
        )
        .unwrap();
        assert!(b.weight_of("perfect") >= 0.5);
        assert_eq!(b.value, metric.score(&labels, &perfect).unwrap());
    }
}

#[test]
fn blend_dominates_and_stays_on_simplex() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for rep in 0..30 {
        let n = 60;
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let k = 1 + rep % 5;
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let skill: f64 = rng.gen_range(0.0..0.4);
                labels
                    .iter()
                    .map(|&y| {
                        (rng.gen_range(0.0..1.0) * (1.0 - skill) + skill * f64::from(y))
                            .clamp(0.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        let ids: Vec<String> = (0..k).map(|i| format!("m{i}")).collect();
        for metric in [MetricId::WeightedF1, MetricId::Logloss] {
            let b = greedy_blend(&ids, &cols, &labels, metric, 25).unwrap();
            for c in &cols {
                assert!(b.value >= metric.score(&labels, c).unwrap());
            }
            assert!(b.weights.iter().all(|&w| w >= 0.0));
            assert!((b.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let blended: Vec<f64> = (0..n)
                .map(|r| b.combine(&cols.iter().map(|c| c[r]).collect::<Vec<_>>()))
                .collect();
            assert!((metric.score(&labels, &blended).unwrap() - b.value).abs() < 1e-12);
        }
    }
}

fn prior_at(rate_num: usize) -> treestack::learner::TrainedLearner {
    let labels: Vec<u8> = (0..10).map(|i| u8::from(i < rate_num)).collect();
    let ds = Dataset::from_binary(vec![Column::numeric("x", vec![0.0; 10])], &labels).unwrap();
    fit_learner(&LearnerSpec::Prior, &ds, None, FitOptions::default(), 0).unwrap()
}

fn hand_stack(weights: Vec<f64>, learners: &[treestack::learner::TrainedLearner]) -> StackedModel {
    let ids = ["a", "b"];
    StackedModel {
        model_type: "stacked".into(),
        members: learners
            .iter()
            .zip(ids)
            .map(|(l, id)| MemberRef {
                id: id.into(),
                hash: treestack::stack::learner_hash(l).unwrap(),
                file: format!("{id}.json"),
            })
            .collect(),
        meta: MetaLearner {
            weights: vec![1.0, -1.0],
            intercept: 0.0,
            lambda: 0.0,
            iterations: 0,
            grad_norm: 0.0,
            converged: true,
        },
        blend: EnsembleBlend {
            members: vec!["a".into(), "b".into(), META_ID.into()],
            counts: vec![0; 3],
            weights,
            metric: MetricId::WeightedF1,
            value: 0.0,
            trace: vec![],
        },
        fold_hash: String::new(),
        flow: vec![],
    }
}

#[test]
fn stacked_prediction_is_weighted_mean() {
    let learners = [prior_at(2), prior_at(8)];
    let rows = Dataset::from_binary(vec![Column::numeric("x", vec![1.0, 2.0])], &[0, 1]).unwrap();
    let p = predict_stacked(
        &hand_stack(vec![0.5, 0.5, 0.0], &learners),
        &learners,
        &rows,
    )
    .unwrap();
    assert!((p[0].prob_attack - 0.5).abs() < 1e-12);
    assert_eq!(p[0].class, 1);
    assert_eq!(p[0].members.len(), 3);
    assert_eq!(&p[0].members[..2], &[0.2, 0.8]);

    let p = predict_stacked(
        &hand_stack(vec![0.0, 1.0, 0.0], &learners),
        &learners,
        &rows,
    )
    .unwrap();
    assert_eq!(p[1].prob_attack, 0.8);
    let p = predict_stacked(
        &hand_stack(vec![0.0, 0.0, 1.0], &learners),
        &learners,
        &rows,
    )
    .unwrap();
    let expect = 1.0 / (1.0 + (-(0.2f64 - 0.8)).exp());
    assert!((p[0].prob_attack - expect).abs() < 1e-12);
}

#[test]
fn scaled_weights_give_same_predictions() {
    let learners = [prior_at(3), prior_at(6)];
    let rows = Dataset::from_binary(vec![Column::numeric("x", vec![1.0])], &[0]).unwrap();
    let w = [0.2, 0.5, 0.3];
    let base = predict_stacked(&hand_stack(w.to_vec(), &learners), &learners, &rows).unwrap();
    for c in [0.1, 3.0, 17.0] {
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let total: f64 = scaled.iter().sum();
        let renorm = scaled.iter().map(|x| x / total).collect();
        let p = predict_stacked(&hand_stack(renorm, &learners), &learners, &rows).unwrap();
        assert_eq!(p[0].class, base[0].class);
        assert!((p[0].prob_attack - base[0].prob_attack).abs() < 1e-12);
    }
}

#[test]
fn member_hash_is_checked() {
    let learners = [prior_at(3), prior_at(6)];
    let model = hand_stack(vec![0.5, 0.5, 0.0], &learners);
    let rows = Dataset::from_binary(vec![Column::numeric("x", vec![1.0])], &[0]).unwrap();
    let swapped = [prior_at(6), prior_at(3)];
    assert!(predict_stacked(&model, &swapped, &rows).is_err());
    assert!(predict_stacked(&model, &learners[..1], &rows).is_err());
}

#[test]
fn stack_fits_only_on_out_of_fold_data() {
    let ds = noisy(240, 3);
    let folds = make_folds(&ds.labels, 4, 2).unwrap();
    let members = [
        member("forest", small_forest(), 1),
        member("lgbm", small_boost(), 2),
    ];
    let fit = fit_stack(
        &ds,
        &members,
        &folds,
        FitOptions::default(),
        &StackConfig::default(),
    )
    .unwrap();
    for step in &fit.flow {
        assert!(
            ["train_folds", "oof", "train_full"].contains(&step.input.as_str()),
            "{step:?}"
        );
        if step.stage == "meta" || step.stage == "blend" {
            assert_eq!(step.input, "oof");
        }
    }
    assert_eq!(fit.blend.members.last().map(String::as_str), Some(META_ID));
    assert!(fit.meta_oof.iter().all(|p| p.is_finite()));
    let files: Vec<String> = members.iter().map(|m| format!("{}.json", m.id)).collect();
    let model = fit.to_model(&files).unwrap();
    let back: StackedModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
    assert_eq!(back, model);

    // The blend was chosen on out-of-fold columns and beats each of them there.
    let mut cols = fit.oof.columns.clone();
    cols.push(fit.meta_oof.clone());
    for c in &cols {
        assert!(fit.blend.value >= fit.blend.metric.score(&ds.labels, c).unwrap());
    }
    let test = noisy(100, 99);
    let a = predict_stacked(&model, &fit.learners, &test).unwrap();
    let b = predict_stacked(&back, &fit.learners, &test).unwrap();
    assert_eq!(a, b);
}
