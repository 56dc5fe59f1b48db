//! Pipeline driver: fragment a mean-field bundle, solve each cluster with
//! FCI or SQD, collate, and report, with per-cluster checkpoints.

pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{load_config, validate_config, Fragmentation, LucjSettings, PipelineConfig, SampleSource};
pub use error::{exit, FailureKind, PipelineError};
pub use pipeline::{
    collate_stage, fragment_stage, load_manifest, report_stage, run_pipeline, run_pipeline_with_summary, solve_stage,
    SolveSummary, Workdir,
};
