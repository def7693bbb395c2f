//! Run configuration, on-disk artifacts and the pipeline commands behind
//! the CLI verbs.

mod commands;
mod config;
mod manifest;

pub use commands::{
    cmd_evaluate, cmd_ingest, cmd_report, cmd_run, cmd_stack, cmd_train, cmd_tune, default_models,
    learner_seed, load_model, model_file, with_threads, BestParams, EvalSplit, EvaluateOutcome,
    GapAnalysis, GapRow, IngestOutcome, IngestReport, LoadedModel, OofRecord, Run, RunOutcome,
    StackOutcome, TrainOutcome, TuneSummary, ACCURACY_BAND, BLEND_FILE, INGEST_REPORT, OOF_FILE,
    PUBLISHED_TABLE, STACKED_FILE, STACKED_NAME, TEST_CACHE, TRAIN_CACHE, TRAIN_METRICS,
};
pub use config::{
    load_config, DataConfig, HyperMode, RunConfig, RunSection, SpaceMode, TuningSection,
    OUT_DIR_ENV,
};
pub use manifest::{ArtifactEntry, RunManifest, MANIFEST_FILE, TOOLKIT};
