//! Confusion counts, support-weighted precision/recall/F1 and the result
//! tables.

mod confusion;
mod report;

pub use confusion::{
    compute_metrics, confusion, ClassComponents, ConfusionCounts, MetricId, MetricsReport,
};
pub use report::{
    emit_report, order_models, EvaluatedModel, ReportBundle, REPORT_SCHEMA_VERSION, TABLE_HEADER,
    TABLE_ORDER,
};
