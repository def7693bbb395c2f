//! End-to-end commands on small synthetic NSL-KDD files.

use std::fs;
use std::path::{Path, PathBuf};

use treestack::learner::LearnerId;
use treestack::pipeline::{
    cmd_evaluate, cmd_ingest, cmd_run, cmd_stack, cmd_train, cmd_tune, with_threads, EvalSplit,
    HyperMode, Run, RunConfig, SpaceMode, TRAIN_CACHE,
};
use treestack::synth::write_synthetic_pair;

fn config(dir: &Path, out: &str) -> RunConfig {
    let train = dir.join("train.txt");
    let test = dir.join("test.txt");
    if !train.exists() {
        write_synthetic_pair(&train, &test, 600, 250, 17).unwrap();
    }
    let text = format!(
        r#"
[data]
train = "{}"
test = "{}"
[run]
seed = 5
folds = 3
out_dir = "{}"
[params.forest]
n_trees = 12
[params.xgb]
n_rounds = 15
[params.cat]
n_rounds = 15
"growth.depth" = 4
[params.lgbm]
n_rounds = 15
"#,
        train.display(),
        test.display(),
        dir.join(out).display()
    );
    RunConfig::from_toml(&text).unwrap()
}

/// Every artifact that must be byte-identical across runs.
fn deterministic_files(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(out).unwrap().to_string_lossy().to_string();
                if rel != "manifest.json" && !rel.ends_with(".jsonl") {
                    files.push((rel, fs::read(&p).unwrap()));
                }
            }
        }
    }
    files.sort();
    files
}

#[test]
fn full_run_is_complete_and_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs: Vec<PathBuf> = Vec::new();
    for (name, threads) in [("a", 1), ("b", 4), ("c", 1)] {
        let cfg = config(dir.path(), name);
        let outcome = with_threads(threads, || {
            let mut run = Run::open(&cfg).unwrap();
            cmd_run(&mut run).unwrap()
        })
        .unwrap();
        assert_eq!(outcome.test.models.len(), 5);
        assert!(outcome.stack.is_some());
        outs.push(cfg.run.out_dir.clone());
    }
    let out = &outs[0];
    for f in ["forest", "xgb", "cat", "lgbm", "stacked", "blend"] {
        assert!(out.join(format!("models/{f}.json")).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("reports/test/metrics.csv")).unwrap();
    let names: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        names,
        ["RF", "XGBoost", "CatBoost", "LGBM", "Stacked Ensemble"]
    );
    assert!(out.join("reports/train/metrics.csv").exists());
    assert!(out.join("reports/test/gap_analysis.json").exists());

    let manifest: treestack::pipeline::RunManifest =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    manifest.verify(out).unwrap();
    for (rel, _) in deterministic_files(out) {
        assert!(
            manifest.artifacts.contains_key(&rel),
            "{rel} missing from manifest"
        );
    }
    assert!(manifest.stages.contains_key("stack"));

    let a = deterministic_files(&outs[0]);
    for other in &outs[1..] {
        let b = deterministic_files(other);
        assert_eq!(a.len(), b.len());
        for ((ra, ba), (rb, bb)) in a.iter().zip(&b) {
            assert_eq!(ra, rb);
            assert!(ba == bb, "{ra} differs");
        }
    }
}

#[test]
fn reingest_keeps_cache_hash_and_bad_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "out");
    let mut run = Run::open(&cfg).unwrap();
    let first = cmd_ingest(&mut run).unwrap();
    let second = cmd_ingest(&mut run).unwrap();
    assert_eq!(first.train_cache_hash, second.train_cache_hash);
    assert_eq!(first.test_cache_hash, second.test_cache_hash);
    assert!(first.report.summary.starts_with("class counts: mismatch"));

    let text = fs::read_to_string(&cfg.data.train).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let cut = &lines[10][..lines[10].len() / 2];
    lines[10] = cut;
    let bad = dir.path().join("truncated.txt");
    fs::write(&bad, lines.join("\n")).unwrap();
    let mut cfg2 = cfg.clone();
    cfg2.data.train = bad;
    let err = cmd_ingest(&mut Run::open(&cfg2).unwrap())
        .unwrap_err()
        .to_string();
    assert!(err.contains(":11:"), "{err}");
}

#[test]
fn commands_need_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "out");
    let mut run = Run::open(&cfg).unwrap();
    assert!(cmd_train(&mut run)
        .unwrap_err()
        .to_string()
        .contains("ingest"));
    cmd_ingest(&mut run).unwrap();
    let err = cmd_evaluate(&mut run, EvalSplit::Test, &[])
        .unwrap_err()
        .to_string();
    assert!(err.contains("not found"), "{err}");
    assert!(!run.out.join("reports/test").exists());
}

#[test]
fn single_learner_train_writes_one_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "out");
    cfg.run.learners = vec![LearnerId::Forest];
    let mut run = Run::open(&cfg).unwrap();
    cmd_ingest(&mut run).unwrap();
    let out = cmd_train(&mut run).unwrap();
    assert_eq!(out.models.len(), 1);
    let models: Vec<_> = fs::read_dir(run.out.join("models")).unwrap().collect();
    assert_eq!(models.len(), 1);
    assert!(cmd_stack(&mut run).is_err());
    let hash = treestack::hashing::sha256_hex(&fs::read(&out.models[0].1).unwrap());
    cmd_train(&mut run).unwrap();
    assert_eq!(
        hash,
        treestack::hashing::sha256_hex(&fs::read(&out.models[0].1).unwrap())
    );
    let eval = cmd_evaluate(&mut run, EvalSplit::Train, &[]).unwrap();
    assert_eq!(eval.models.len(), 1);
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(run.out.join("reports/train/manifest.json")).unwrap())
            .unwrap();
    assert!(m["label"].as_str().unwrap().contains("overfitting"));
}

#[test]
fn tune_logs_one_line_per_trial_and_pinned_space_keeps_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "out");
    cfg.run.learners = vec![LearnerId::Forest, LearnerId::Lgbm];
    cfg.tuning.mode = HyperMode::Tune;
    cfg.tuning.budget = 1;
    cfg.tuning.space = SpaceMode::Pinned;
    let mut run = Run::open(&cfg).unwrap();
    cmd_ingest(&mut run).unwrap();
    assert!(cmd_train(&mut run)
        .unwrap_err()
        .to_string()
        .contains("tune"));
    let summaries = cmd_tune(&mut run).unwrap();
    for s in &summaries {
        assert_eq!(s.best.spec, cfg.base_spec(s.learner).unwrap());
        let log =
            fs::read_to_string(run.out.join(format!("tune/{}.trials.jsonl", s.learner))).unwrap();
        assert_eq!(log.lines().count(), 1);
    }
    cfg.tuning.budget = 3;
    cfg.tuning.space = SpaceMode::Default;
    cfg.run.learners = vec![LearnerId::Lgbm];
    let mut run = Run::open(&cfg).unwrap();
    let s = cmd_tune(&mut run).unwrap();
    let log = fs::read_to_string(run.out.join("tune/lgbm.trials.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert_eq!(s[0].trials, 3);
    cmd_train(&mut run).unwrap();
    assert!(run.out.join(TRAIN_CACHE).exists());
}
