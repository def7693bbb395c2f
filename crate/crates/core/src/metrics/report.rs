use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::confusion::MetricsReport;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const TABLE_HEADER: &str = "model,accuracy,precision,recall,f1";
/// Row order of the published results table.
pub const TABLE_ORDER: [&str; 5] = ["RF", "XGBoost", "CatBoost", "LGBM", "Stacked Ensemble"];
const STACKED: &str = "Stacked Ensemble";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedModel {
    pub name: String,
    pub metrics: MetricsReport,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema_version: u32,
    models: &'a [EvaluatedModel],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportBundle {
    pub table_csv: PathBuf,
    pub table_json: PathBuf,
    /// Single-model comparison.
    pub model_evaluation_csv: PathBuf,
    /// Single models against the stacked ensemble.
    pub single_vs_stacked_csv: PathBuf,
    pub manifest: Option<PathBuf>,
}

/// Known table names first in table order, then the rest as given.
pub fn order_models(models: &[EvaluatedModel]) -> Vec<EvaluatedModel> {
    let rank = |m: &EvaluatedModel| {
        TABLE_ORDER
            .iter()
            .position(|n| *n == m.name)
            .unwrap_or(TABLE_ORDER.len())
    };
    let mut out = models.to_vec();
    out.sort_by_key(rank);
    out
}

fn pct(v: f64) -> i64 {
    (v * 100.0).round() as i64
}

fn plot_rows(models: &[&EvaluatedModel]) -> String {
    let mut s = String::from("model,metric,value\n");
    for m in models {
        for (metric, v) in [
            ("accuracy", m.metrics.accuracy),
            ("precision", m.metrics.precision),
            ("recall", m.metrics.recall),
            ("f1", m.metrics.f1),
        ] {
            let _ = writeln!(s, "{},{metric},{:.4}", m.name, 100.0 * v);
        }
    }
    s
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `metrics.csv`, `metrics.json`, `fig_model_evaluation.csv`,
/// `fig_single_vs_stacked.csv` and, when given, `manifest.json` into
/// `out_dir`.
pub fn emit_report(
    models: &[EvaluatedModel],
    out_dir: &Path,
    manifest: Option<&serde_json::Value>,
) -> Result<ReportBundle> {
    if models.is_empty() {
        return Err(Error::Metrics("nothing to report".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ordered = order_models(models);

    let mut csv = format!("{TABLE_HEADER}\n");
    for m in &ordered {
        let r = &m.metrics;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            m.name,
            pct(r.accuracy),
            pct(r.precision),
            pct(r.recall),
            pct(r.f1)
        );
    }
    let bundle = ReportBundle {
        table_csv: out_dir.join("metrics.csv"),
        table_json: out_dir.join("metrics.json"),
        model_evaluation_csv: out_dir.join("fig_model_evaluation.csv"),
        single_vs_stacked_csv: out_dir.join("fig_single_vs_stacked.csv"),
        manifest: manifest.map(|_| out_dir.join("manifest.json")),
    };
    write(&bundle.table_csv, csv.as_bytes())?;
    let json = serde_json::to_vec_pretty(&ReportJson {
        schema_version: REPORT_SCHEMA_VERSION,
        models: &ordered,
    })?;
    write(&bundle.table_json, &json)?;

    let singles: Vec<&EvaluatedModel> = ordered.iter().filter(|m| m.name != STACKED).collect();
    write(&bundle.model_evaluation_csv, plot_rows(&singles).as_bytes())?;
    let all: Vec<&EvaluatedModel> = ordered.iter().collect();
    write(&bundle.single_vs_stacked_csv, plot_rows(&all).as_bytes())?;

    if let (Some(path), Some(m)) = (&bundle.manifest, manifest) {
        write(path, &serde_json::to_vec_pretty(m)?)?;
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{compute_metrics, confusion};

    fn evaluated(name: &str, preds: &[u8]) -> EvaluatedModel {
        let y = [1, 1, 0, 0, 1, 0, 1, 1];
        EvaluatedModel {
            name: name.into(),
            metrics: compute_metrics(&confusion(&y, preds, 2).unwrap()).unwrap(),
        }
    }

    #[test]
    fn table_order_and_determinism() {
        let models = vec![
            evaluated("Stacked Ensemble", &[1, 1, 0, 0, 1, 0, 1, 1]),
            evaluated("LGBM", &[1, 0, 0, 0, 1, 0, 1, 1]),
            evaluated("RF", &[1, 1, 1, 0, 1, 0, 1, 1]),
            evaluated("CatBoost", &[1, 1, 0, 1, 1, 0, 1, 1]),
            evaluated("XGBoost", &[0, 1, 0, 0, 1, 0, 1, 1]),
        ];
        let dir = tempfile::tempdir().unwrap();
        let b = emit_report(&models, dir.path(), Some(&serde_json::json!({"seed": 1}))).unwrap();
        let csv = fs::read_to_string(&b.table_csv).unwrap();
        let names: Vec<&str> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(names, TABLE_ORDER);
        assert_eq!(csv.lines().next().unwrap(), TABLE_HEADER);
        assert!(csv.contains("Stacked Ensemble,100,100,100,100"));
        let fig2 = fs::read_to_string(&b.model_evaluation_csv).unwrap();
        assert!(!fig2.contains("Stacked"));
        assert_eq!(fig2.lines().count(), 1 + 4 * 4);

        let dir2 = tempfile::tempdir().unwrap();
        let b2 = emit_report(&models, dir2.path(), Some(&serde_json::json!({"seed": 1}))).unwrap();
        for (x, y) in [
            (&b.table_csv, &b2.table_csv),
            (&b.table_json, &b2.table_json),
            (&b.single_vs_stacked_csv, &b2.single_vs_stacked_csv),
        ] {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
        }
    }

    #[test]
    fn single_row_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let b = emit_report(&[evaluated("RF", &[1; 8])], dir.path(), None).unwrap();
        assert_eq!(fs::read_to_string(b.table_csv).unwrap().lines().count(), 2);
        assert!(b.manifest.is_none());
        assert!(emit_report(&[], dir.path(), None).is_err());
    }
}
