use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{HyperMode, RunConfig, SpaceMode};
use super::manifest::{RunManifest, TOOLKIT};
use crate::data::{
    check_reference_counts, parse_nslkdd, read_cache, write_cache, Dataset, DatasetSchema,
    SplitCountReport, ATTACK_MAP_VERSION,
};
use crate::error::{Error, Result};
use crate::hashing::sha256_hex;
use crate::learner::{fit_learner, FitOptions, LearnerId, LearnerSpec, TrainedLearner};
use crate::metrics::{
    compute_metrics, confusion, emit_report, EvaluatedModel, MetricId, MetricsReport,
};
use crate::search::{default_spaces, make_folds, tune, FoldPlan, ParamPoint};
use crate::seed;
use crate::stack::{fit_stack, learner_bytes, predict_stacked, BaseMember, StackedModel};

pub const TRAIN_CACHE: &str = "cache/train.json";
pub const TEST_CACHE: &str = "cache/test.json";
pub const INGEST_REPORT: &str = "reports/ingest.json";
pub const TRAIN_METRICS: &str = "reports/train_metrics.json";
pub const STACKED_FILE: &str = "models/stacked.json";
pub const BLEND_FILE: &str = "models/blend.json";
pub const OOF_FILE: &str = "models/oof.json";
pub const STACKED_NAME: &str = "Stacked Ensemble";

/// Published accuracy, precision, recall and F1 (percent) per table row.
pub const PUBLISHED_TABLE: [(&str, [f64; 4]); 5] = [
    ("RF", [78.0, 84.0, 78.0, 78.0]),
    ("XGBoost", [80.0, 85.0, 80.0, 80.0]),
    ("CatBoost", [80.0, 85.0, 80.0, 80.0]),
    ("LGBM", [78.0, 84.0, 78.0, 78.0]),
    (STACKED_NAME, [90.0, 90.0, 89.0, 89.0]),
];
/// Accuracy band, in percentage points, for single learners.
pub const ACCURACY_BAND: f64 = 6.0;

pub fn model_file(id: LearnerId) -> String {
    format!("models/{id}.json")
}

fn tune_log_file(id: LearnerId) -> String {
    format!("tune/{id}.trials.jsonl")
}

fn tune_best_file(id: LearnerId) -> String {
    format!("tune/{id}.best.json")
}

pub fn learner_seed(seed: u64, id: LearnerId) -> u64 {
    seed::derive(seed, &format!("learner:{id}"))
}

/// Runs `f` on a pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// An output directory and its manifest.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub out: PathBuf,
    pub manifest: RunManifest,
}

impl<'a> Run<'a> {
    pub fn open(cfg: &'a RunConfig) -> Result<Self> {
        let out = cfg.run.out_dir.clone();
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let fresh = RunManifest::new(cfg.snapshot()?, cfg.run.seed)?;
        let manifest = match RunManifest::load(&out)? {
            Some(m) if m.config_hash == fresh.config_hash => m,
            Some(_) => {
                log::warn!("{}: config changed, starting a new manifest", out.display());
                fresh
            }
            None => fresh,
        };
        let mut run = Run { cfg, out, manifest };
        run.record_decisions();
        Ok(run)
    }

    fn record_decisions(&mut self) {
        let cfg = self.cfg;
        let d = &mut self.manifest.decisions;
        d.insert("folds".into(), json!(cfg.run.folds));
        d.insert("fold_stratified".into(), json!(true));
        d.insert("max_bins".into(), json!(cfg.run.max_bins));
        d.insert(
            "hyperparameters".into(),
            serde_json::to_value(cfg.tuning.mode).unwrap_or_default(),
        );
        d.insert("tuning_metric".into(), json!(cfg.tuning.metric.as_str()));
        d.insert("meta_lambda".into(), json!(cfg.stack.meta_lambda));
        d.insert(
            "blend_metric".into(),
            json!(cfg.stack.blend_metric.as_str()),
        );
        d.insert("blend_max_iters".into(), json!(cfg.stack.blend_max_iters));
        d.insert("decision_threshold".into(), json!(0.5));
        d.insert("threshold_tie".into(), json!("attack"));
        d.insert("attack_map".into(), json!(ATTACK_MAP_VERSION));
        d.insert(
            "categorical_strategy".into(),
            json!(LearnerId::ALL
                .iter()
                .map(|id| (id.as_str().to_string(), json!(id.default_strategy())))
                .collect::<serde_json::Map<_, _>>()),
        );
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.manifest.record(&self.out, &path)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.manifest
            .stages
            .insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }

    pub fn save(&self) -> Result<PathBuf> {
        self.manifest.save(&self.out)
    }

    fn load_split(&self, rel: &str) -> Result<Dataset> {
        let path = self.path(rel);
        if !path.exists() {
            return Err(Error::Config(format!(
                "{} not found; run `ingest` first",
                path.display()
            )));
        }
        read_cache(&path, &DatasetSchema::nsl_kdd())
    }

    fn options(&self) -> FitOptions {
        FitOptions {
            max_bins: self.cfg.run.max_bins,
            strategy: None,
        }
    }

    fn folds(&self, train: &Dataset) -> Result<FoldPlan> {
        make_folds(
            &train.labels,
            self.cfg.run.folds,
            seed::derive(self.cfg.run.seed, "folds"),
        )
    }

    /// Tuned parameters when tuning is on, the configured defaults otherwise.
    pub fn resolved_spec(&self, id: LearnerId) -> Result<LearnerSpec> {
        match self.cfg.tuning.mode {
            HyperMode::TableIiDefaults => self.cfg.base_spec(id),
            HyperMode::Tune => {
                let path = self.path(&tune_best_file(id));
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "no tuned parameters for {id}; run `tune` first"
                    )));
                }
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                let best: BestParams = serde_json::from_slice(&bytes)?;
                Ok(best.spec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub summary: String,
    pub schema_hash: String,
    pub attack_map: String,
    pub train: SplitCountReport,
    pub test: SplitCountReport,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub report: IngestReport,
    pub train_cache_hash: String,
    pub test_cache_hash: String,
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

/// Parses both splits (test with the training vocabularies), writes the
/// caches and the class-count report.
pub fn cmd_ingest(run: &mut Run) -> Result<IngestOutcome> {
    run.timed("ingest", |run| {
        let schema = DatasetSchema::nsl_kdd();
        let train = parse_nslkdd(&run.cfg.data.train, &schema, None)?;
        let test = parse_nslkdd(&run.cfg.data.test, &schema, Some(&train.vocab()))?;
        run.manifest
            .data
            .insert("train".into(), file_hash(&run.cfg.data.train)?);
        run.manifest
            .data
            .insert("test".into(), file_hash(&run.cfg.data.test)?);

        let train_report = check_reference_counts(&train);
        let test_report = check_reference_counts(&test);
        for note in train_report.notes.iter().chain(&test_report.notes) {
            log::warn!("{note}");
        }
        let summary = if train_report.matches && test_report.matches {
            "class counts: match (with noted total discrepancy)".to_string()
        } else {
            "class counts: mismatch (see warnings)".to_string()
        };
        log::info!("{summary}");
        let report = IngestReport {
            summary,
            schema_hash: schema.hash(),
            attack_map: ATTACK_MAP_VERSION.into(),
            train: train_report,
            test: test_report,
        };
        let train_path = run.path(TRAIN_CACHE);
        let train_cache_hash = write_cache(&train_path, &train, &schema)?;
        run.manifest.record(&run.out, &train_path)?;
        let test_path = run.path(TEST_CACHE);
        let test_cache_hash = write_cache(&test_path, &test, &schema)?;
        run.manifest.record(&run.out, &test_path)?;
        run.write_json(INGEST_REPORT, &report)?;
        Ok(IngestOutcome {
            report,
            train_cache_hash,
            test_cache_hash,
        })
    })
}

/// Best point of a search, without timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestParams {
    pub learner: LearnerId,
    pub metric: MetricId,
    pub mean: f64,
    pub std: f64,
    pub trial: usize,
    pub params: ParamPoint,
    pub spec: LearnerSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSummary {
    pub learner: LearnerId,
    pub best: BestParams,
    pub trials: usize,
    pub failed: usize,
}

pub fn cmd_tune(run: &mut Run) -> Result<Vec<TuneSummary>> {
    run.timed("tune", |run| {
        let train = run.load_split(TRAIN_CACHE)?;
        let folds = run.folds(&train)?;
        let spaces = default_spaces();
        let mut out = Vec::new();
        for &id in &run.cfg.run.learners {
            let base = run.cfg.base_spec(id)?;
            let space = &spaces[&id];
            let space = match run.cfg.tuning.space {
                SpaceMode::Default => space.clone(),
                SpaceMode::Pinned => space.pinned_to(&base)?,
            };
            let mut log_bytes = Vec::new();
            let outcome = tune(
                &train,
                &base,
                &space,
                run.cfg.tuning.budget,
                &folds,
                run.cfg.tuning.metric,
                run.options(),
                seed::derive(run.cfg.run.seed, &format!("tune:{id}")),
                Some(&mut log_bytes),
            );
            run.write(&tune_log_file(id), &log_bytes)?;
            let outcome = outcome.map_err(|e| Error::Training(format!("{id}: {e}")))?;
            let t = outcome.best_trial();
            let best = BestParams {
                learner: id,
                metric: run.cfg.tuning.metric,
                mean: t.mean,
                std: t.std,
                trial: t.id,
                params: t.params.clone(),
                spec: crate::search::apply_point(&base, &t.params)?,
            };
            run.write_json(&tune_best_file(id), &best)?;
            log::info!(
                "{id}: best {} {:.6} (trial {})",
                best.metric.as_str(),
                best.mean,
                best.trial
            );
            out.push(TuneSummary {
                learner: id,
                best,
                trials: outcome.trials.len(),
                failed: outcome.trials.iter().filter(|t| !t.ok()).count(),
            });
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub models: Vec<(LearnerId, PathBuf)>,
    pub failures: Vec<(LearnerId, String)>,
    pub train_metrics: Vec<EvaluatedModel>,
}

fn evaluate_classes(name: &str, labels: &[u8], preds: &[u8]) -> Result<EvaluatedModel> {
    Ok(EvaluatedModel {
        name: name.into(),
        metrics: compute_metrics(&confusion(labels, preds, 2)?)?,
    })
}

/// Fits every selected learner on the full training split. A failing
/// learner is reported and the others continue.
pub fn cmd_train(run: &mut Run) -> Result<TrainOutcome> {
    run.timed("train", |run| {
        let train = run.load_split(TRAIN_CACHE)?;
        let mut out = TrainOutcome {
            models: Vec::new(),
            failures: Vec::new(),
            train_metrics: Vec::new(),
        };
        let specs = run
            .cfg
            .run
            .learners
            .iter()
            .map(|&id| Ok((id, run.resolved_spec(id)?)))
            .collect::<Result<Vec<_>>>()?;
        for (id, spec) in specs {
            match fit_learner(
                &spec,
                &train,
                None,
                run.options(),
                learner_seed(run.cfg.run.seed, id),
            ) {
                Ok(model) => {
                    let path = run.write(&model_file(id), &learner_bytes(&model)?)?;
                    let preds = model.predict_class(&train)?;
                    out.train_metrics.push(evaluate_classes(
                        id.display_name(),
                        &train.labels,
                        &preds,
                    )?);
                    out.models.push((id, path));
                }
                Err(e) => {
                    log::error!("{id}: {e}");
                    out.failures.push((id, e.to_string()));
                }
            }
        }
        if out.models.is_empty() {
            return Err(Error::Training("every learner failed to train".into()));
        }
        run.write_json(TRAIN_METRICS, &out.train_metrics)?;
        Ok(out)
    })
}

/// Out-of-fold columns kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofRecord {
    pub fold_hash: String,
    pub model_ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub meta: Vec<f64>,
    pub blended: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StackOutcome {
    pub model: StackedModel,
    pub oof: OofRecord,
    pub path: PathBuf,
}

/// Cross-fits the selected learners, fits the meta-learner and the blend on
/// their out-of-fold predictions and refits the bases on the full split.
pub fn cmd_stack(run: &mut Run) -> Result<StackOutcome> {
    run.timed("stack", |run| {
        if run.cfg.run.learners.len() < 2 {
            return Err(Error::Config("stacking needs at least two learners".into()));
        }
        let train = run.load_split(TRAIN_CACHE)?;
        let folds = run.folds(&train)?;
        let members = run
            .cfg
            .run
            .learners
            .iter()
            .map(|&id| {
                Ok(BaseMember {
                    id: id.as_str().into(),
                    spec: run.resolved_spec(id)?,
                    seed: learner_seed(run.cfg.run.seed, id),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fit = fit_stack(&train, &members, &folds, run.options(), &run.cfg.stack)?;
        let files: Vec<String> = run
            .cfg
            .run
            .learners
            .iter()
            .map(|id| format!("{id}.json"))
            .collect();
        for (&id, learner) in run.cfg.run.learners.iter().zip(&fit.learners) {
            run.write(&model_file(id), &learner_bytes(learner)?)?;
        }
        let model = fit.to_model(&files)?;
        let path = run.write_json(STACKED_FILE, &model)?;
        run.write_json(BLEND_FILE, &fit.blend)?;
        let blended = (0..train.n_rows())
            .map(|r| {
                let mut probs: Vec<f64> = fit.oof.columns.iter().map(|c| c[r]).collect();
                probs.push(fit.meta_oof[r]);
                fit.blend.combine(&probs)
            })
            .collect();
        let oof = OofRecord {
            fold_hash: fit.oof.fold_hash.clone(),
            model_ids: fit.oof.model_ids.clone(),
            columns: fit.oof.columns.clone(),
            meta: fit.meta_oof.clone(),
            blended,
        };
        run.write(OOF_FILE, &serde_json::to_vec(&oof)?)?;
        log::info!(
            "blend {}: {:?} = {:.6}",
            fit.blend.metric.as_str(),
            fit.blend
                .members
                .iter()
                .zip(&fit.blend.weights)
                .collect::<Vec<_>>(),
            fit.blend.value
        );
        Ok(StackOutcome { model, oof, path })
    })
}

/// A model file as loaded for scoring.
pub enum LoadedModel {
    Single(TrainedLearner),
    Stacked(StackedModel, Vec<TrainedLearner>),
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let v = read_json(path)?;
    if v.get("model_type").and_then(|t| t.as_str()) == Some(crate::stack::STACKED_MODEL_TYPE) {
        let model: StackedModel = serde_json::from_value(v)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let learners = model
            .members
            .iter()
            .map(|m| Ok(serde_json::from_value(read_json(&dir.join(&m.file))?)?))
            .collect::<Result<Vec<TrainedLearner>>>()?;
        model.verify_members(&learners)?;
        Ok(LoadedModel::Stacked(model, learners))
    } else {
        Ok(LoadedModel::Single(serde_json::from_value(v)?))
    }
}

impl LoadedModel {
    pub fn name(&self) -> &'static str {
        match self {
            LoadedModel::Single(l) => l.spec.id().map_or("Prior", LearnerId::display_name),
            LoadedModel::Stacked(..) => STACKED_NAME,
        }
    }

    pub fn predict_class(&self, ds: &Dataset) -> Result<Vec<u8>> {
        match self {
            LoadedModel::Single(l) => l.predict_class(ds),
            LoadedModel::Stacked(m, learners) => Ok(predict_stacked(m, learners, ds)?
                .into_iter()
                .map(|p| p.class)
                .collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    Test,
    Train,
}

impl EvalSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalSplit::Test => "test",
            EvalSplit::Train => "train",
        }
    }

    fn label(self) -> &'static str {
        match self {
            EvalSplit::Test => "held-out test split",
            EvalSplit::Train => "training split (overfitting diagnostics, not a test result)",
        }
    }
}

/// Default model set: every selected learner, plus the stacked model when
/// one was built.
pub fn default_models(run: &Run) -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = run
        .cfg
        .run
        .learners
        .iter()
        .map(|&id| run.path(&model_file(id)))
        .collect();
    let stacked = run.path(STACKED_FILE);
    if stacked.exists() {
        paths.push(stacked);
    }
    paths
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutcome {
    pub split: EvalSplit,
    pub models: Vec<EvaluatedModel>,
    pub dir: PathBuf,
}

/// Scores `models` (or the default set) on a split and writes the table,
/// plot data and report manifest under `reports/<split>/`.
pub fn cmd_evaluate(
    run: &mut Run,
    split: EvalSplit,
    models: &[PathBuf],
) -> Result<EvaluateOutcome> {
    let paths = if models.is_empty() {
        default_models(run)
    } else {
        models.to_vec()
    };
    if let Some(missing) = paths.iter().find(|p| !p.exists()) {
        return Err(Error::Config(format!(
            "model file {} not found",
            missing.display()
        )));
    }
    run.timed(&format!("evaluate_{}", split.as_str()), |run| {
        let ds = run.load_split(match split {
            EvalSplit::Test => TEST_CACHE,
            EvalSplit::Train => TRAIN_CACHE,
        })?;
        let mut evaluated = Vec::new();
        let mut hashes = serde_json::Map::new();
        for path in &paths {
            let model = load_model(path)?;
            let preds = model
                .predict_class(&ds)
                .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
            evaluated.push(evaluate_classes(model.name(), &ds.labels, &preds)?);
            hashes.insert(model.name().into(), json!(file_hash(path)?));
        }
        let report_manifest = json!({
            "toolkit": TOOLKIT,
            "config_hash": run.manifest.config_hash,
            "seed": run.cfg.run.seed,
            "data": run.manifest.data,
            "split": split.as_str(),
            "label": split.label(),
            "rows": ds.n_rows(),
            "models": hashes,
        });
        let dir = run.path(&format!("reports/{}", split.as_str()));
        let bundle = emit_report(&evaluated, &dir, Some(&report_manifest))?;
        for p in [
            Some(&bundle.table_csv),
            Some(&bundle.table_json),
            Some(&bundle.model_evaluation_csv),
            Some(&bundle.single_vs_stacked_csv),
            bundle.manifest.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            run.manifest.record(&run.out, p)?;
        }
        for m in &evaluated {
            log::info!(
                "{} [{}]: accuracy {:.4} f1 {:.4}",
                m.name,
                split.as_str(),
                m.metrics.accuracy,
                m.metrics.f1
            );
        }
        Ok(EvaluateOutcome {
            split,
            models: evaluated,
            dir,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub model: String,
    /// Measured accuracy, precision, recall, F1 in percent.
    pub measured: [f64; 4],
    pub published: Option<[f64; 4]>,
    /// Measured minus published, in percentage points.
    pub gap: Option<[f64; 4]>,
    pub accuracy_within_band: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapAnalysis {
    pub band_pp: f64,
    pub rows: Vec<GapRow>,
    pub best_single: Option<String>,
    /// Stacked minus best single test accuracy, in percentage points.
    pub stacked_accuracy_margin_pp: Option<f64>,
    /// Blended minus best single out-of-fold weighted F1, in points.
    pub stacked_oof_f1_margin_pp: Option<f64>,
    pub notes: Vec<String>,
}

fn percent(m: &MetricsReport) -> [f64; 4] {
    [m.accuracy, m.precision, m.recall, m.f1].map(|v| 100.0 * v)
}

/// Compares the test report with the published table and, when a stack was
/// built, the stacked model's margin over the best single model.
pub fn cmd_report(run: &mut Run) -> Result<GapAnalysis> {
    run.timed("report", |run| {
        let path = run.path("reports/test/metrics.json");
        if !path.exists() {
            return Err(Error::Config(format!(
                "{} not found; run `evaluate` first",
                path.display()
            )));
        }
        let v = read_json(&path)?;
        let models: Vec<EvaluatedModel> = serde_json::from_value(v["models"].clone())?;
        let rows: Vec<GapRow> = models
            .iter()
            .map(|m| {
                let measured = percent(&m.metrics);
                let published = PUBLISHED_TABLE
                    .iter()
                    .find(|(n, _)| *n == m.name)
                    .map(|(_, p)| *p);
                let gap = published.map(|p| [0, 1, 2, 3].map(|i| measured[i] - p[i]));
                GapRow {
                    model: m.name.clone(),
                    measured,
                    published,
                    accuracy_within_band: gap
                        .filter(|_| m.name != STACKED_NAME)
                        .map(|g| g[0].abs() <= ACCURACY_BAND),
                    gap,
                }
            })
            .collect();
        let singles: Vec<&GapRow> = rows.iter().filter(|r| r.model != STACKED_NAME).collect();
        let best = singles
            .iter()
            .copied()
            .fold(None::<&GapRow>, |b, r| match b {
                Some(b) if b.measured[0] >= r.measured[0] => Some(b),
                _ => Some(r),
            });
        let stacked = rows.iter().find(|r| r.model == STACKED_NAME);
        let stacked_accuracy_margin_pp = stacked
            .zip(best)
            .map(|(s, b)| s.measured[0] - b.measured[0]);

        let mut notes = Vec::new();
        let oof_path = run.path(OOF_FILE);
        let stacked_oof_f1_margin_pp = if oof_path.exists() {
            let oof: OofRecord = serde_json::from_value(read_json(&oof_path)?)?;
            let train = run.load_split(TRAIN_CACHE)?;
            let f1 = |c: &[f64]| MetricId::WeightedF1.score(&train.labels, c);
            let mut best_single = f64::NEG_INFINITY;
            for c in &oof.columns {
                best_single = best_single.max(f1(c)?);
            }
            Some(100.0 * (f1(&oof.blended)? - best_single))
        } else {
            None
        };
        if let Some(s) = stacked {
            let p = s.published.unwrap_or_default();
            notes.push(format!(
                "stacked ensemble: accuracy {:.2} vs published {:.0}, F1 {:.2} vs published {:.0}",
                s.measured[0], p[0], s.measured[3], p[3]
            ));
        }
        if let Some(m) = stacked_accuracy_margin_pp {
            notes.push(format!(
                "stacked minus best single test accuracy: {m:+.2} pp"
            ));
        }
        if let Some(m) = stacked_oof_f1_margin_pp {
            notes.push(format!(
                "stacked minus best single out-of-fold weighted F1: {m:+.2} pp"
            ));
        }
        let analysis = GapAnalysis {
            band_pp: ACCURACY_BAND,
            best_single: best.map(|b| b.model.clone()),
            rows,
            stacked_accuracy_margin_pp,
            stacked_oof_f1_margin_pp,
            notes,
        };
        let mut csv = String::from("model,metric,measured,published,gap\n");
        for r in &analysis.rows {
            for (i, metric) in ["accuracy", "precision", "recall", "f1"].iter().enumerate() {
                let published = r
                    .published
                    .map_or(String::new(), |p| format!("{:.0}", p[i]));
                let gap = r.gap.map_or(String::new(), |g| format!("{:.4}", g[i]));
                csv.push_str(&format!(
                    "{},{metric},{:.4},{published},{gap}\n",
                    r.model, r.measured[i]
                ));
            }
        }
        run.write("reports/test/gap_analysis.csv", csv.as_bytes())?;
        run.write_json("reports/test/gap_analysis.json", &analysis)?;
        for n in &analysis.notes {
            log::info!("{n}");
        }
        Ok(analysis)
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ingest: IngestOutcome,
    pub train: TrainOutcome,
    pub stack: Option<StackOutcome>,
    pub test: EvaluateOutcome,
    pub gap: GapAnalysis,
}

/// ingest, tune (when configured), train, stack (two or more learners),
/// evaluate on both splits and report.
pub fn cmd_run(run: &mut Run) -> Result<RunOutcome> {
    let ingest = cmd_ingest(run)?;
    if run.cfg.tuning.mode == HyperMode::Tune {
        cmd_tune(run)?;
    }
    let train = cmd_train(run)?;
    let stack = if run.cfg.run.learners.len() >= 2 {
        Some(cmd_stack(run)?)
    } else {
        None
    };
    cmd_evaluate(run, EvalSplit::Train, &[])?;
    let test = cmd_evaluate(run, EvalSplit::Test, &[])?;
    let gap = cmd_report(run)?;
    run.save()?;
    Ok(RunOutcome {
        ingest,
        train,
        stack,
        test,
        gap,
    })
}
