use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DEFAULT_MAX_BINS;
use crate::learner::{LearnerId, LearnerSpec};
use crate::metrics::MetricId;
use crate::search::{apply_point, ParamPoint};
use crate::stack::StackConfig;

/// The only environment variable read: overrides `run.out_dir`.
pub const OUT_DIR_ENV: &str = "TREESTACK_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperMode {
    /// The published default hyperparameters.
    #[default]
    TableIiDefaults,
    /// Cross-validated search with `tuning.budget` trials.
    Tune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceMode {
    #[default]
    Default,
    /// Every searched parameter fixed at the learner's base value.
    Pinned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub learners: Vec<LearnerId>,
    pub folds: usize,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub max_bins: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 42,
            learners: LearnerId::ALL.to_vec(),
            folds: 10,
            out_dir: PathBuf::from("runs/default"),
            threads: 0,
            max_bins: DEFAULT_MAX_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSection {
    pub mode: HyperMode,
    pub budget: usize,
    pub metric: MetricId,
    pub space: SpaceMode,
}

impl Default for TuningSection {
    fn default() -> Self {
        TuningSection {
            mode: HyperMode::TableIiDefaults,
            budget: 10,
            metric: MetricId::Logloss,
            space: SpaceMode::Default,
        }
    }
}

/// A whole run, as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub tuning: TuningSection,
    #[serde(default)]
    pub stack: StackConfig,
    /// Per-learner parameter overrides by dotted path, e.g.
    /// `[params.forest] n_trees = 50`.
    #[serde(default)]
    pub params: BTreeMap<String, ParamPoint>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.folds < 2 {
            return Err(Error::Config(format!(
                "run.folds must be >= 2, got {}",
                self.run.folds
            )));
        }
        if self.tuning.mode == HyperMode::Tune && self.tuning.budget < 1 {
            return Err(Error::Config("tuning.budget must be >= 1".into()));
        }
        if self.run.learners.is_empty() {
            return Err(Error::Config("run.learners is empty".into()));
        }
        let mut seen = self.run.learners.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.run.learners.len() {
            return Err(Error::Config("run.learners lists a learner twice".into()));
        }
        if !(2..=256).contains(&self.run.max_bins) {
            return Err(Error::Config(format!(
                "run.max_bins must be in 2..=256, got {}",
                self.run.max_bins
            )));
        }
        if !(self.stack.meta_lambda.is_finite() && self.stack.meta_lambda >= 0.0) {
            return Err(Error::Config("stack.meta_lambda must be >= 0".into()));
        }
        for (key, point) in &self.params {
            let id: LearnerId = key
                .parse()
                .map_err(|_| Error::Config(format!("params.{key}: unknown learner")))?;
            apply_point(&id.default_spec(), point)
                .map_err(|e| Error::Config(format!("params.{key}: {e}")))?;
        }
        Ok(())
    }

    /// Default parameters of `id` with this config's overrides applied.
    pub fn base_spec(&self, id: LearnerId) -> Result<LearnerSpec> {
        let point = self
            .params
            .iter()
            .find(|(k, _)| k.parse::<LearnerId>().ok() == Some(id))
            .map(|(_, p)| p.clone())
            .unwrap_or_default();
        apply_point(&id.default_spec(), &point)
    }

    /// The config as recorded in manifests. Thread count and output dir are
    /// left out, since results do not depend on them.
    pub fn snapshot(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        if let Some(run) = v.get_mut("run").and_then(|r| r.as_object_mut()) {
            run.remove("threads");
            run.remove("out_dir");
        }
        Ok(v)
    }
}

/// Reads a TOML config. Relative paths are taken from the config file's
/// directory, and `TREESTACK_OUT_DIR`, when set, replaces the output dir.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [
        &mut cfg.data.train,
        &mut cfg.data.test,
        &mut cfg.run.out_dir,
    ] {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
        cfg.run.out_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_toml("[data]\ntrain = \"a.txt\"\ntest = \"b.txt\"\n").unwrap();
        assert_eq!(cfg.run.folds, 10);
        assert_eq!(cfg.run.learners.len(), 4);
        assert_eq!(cfg.tuning.mode, HyperMode::TableIiDefaults);
        assert_eq!(cfg.stack.meta_lambda, 1e-3);
        assert_eq!(
            cfg.base_spec(LearnerId::Forest).unwrap(),
            LearnerId::Forest.default_spec()
        );
    }

    #[test]
    fn overrides_and_validation() {
        let text = r#"
[data]
train = "a"
test = "b"
[run]
learners = ["forest", "lgbm"]
folds = 3
[tuning]
mode = "tune"
budget = 4
metric = "weighted_f1"
[params.forest]
n_trees = 7
[params.lgbm]
"growth.num_leaves" = 15
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.tuning.mode, HyperMode::Tune);
        match cfg.base_spec(LearnerId::Forest).unwrap() {
            LearnerSpec::Forest(p) => assert_eq!(p.n_trees, 7),
            s => panic!("{s:?}"),
        }
        assert!(!cfg.snapshot().unwrap()["run"]
            .as_object()
            .unwrap()
            .contains_key("threads"));
        for bad in [
            text.replace("folds = 3", "folds = 1"),
            text.replace("budget = 4", "budget = 0"),
            text.replace("n_trees = 7", "n_tress = 7"),
            text.replace("[params.forest]", "[params.svm]"),
            text.replace("seed", "sed") + "\n[run2]\n",
        ] {
            assert!(RunConfig::from_toml(&bad).is_err(), "{bad}");
        }
    }
}
