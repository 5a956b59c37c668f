//! Task suite, runners, grading and metrics for tool-calling sessions.

pub mod generate;
pub mod grade;
pub mod metrics;
pub mod runner;
pub mod task;

pub use generate::{catalog, gen_suite, input_layer, GenError, TaskDef, SUITE_NAME};
pub use grade::{compare_datasets, geometries_close, grade_output, Grade, GradeError, COORD_TOLERANCE};
pub use metrics::{compute_metrics, CategoryMetrics, MetricsReport, TaskOutcome};
pub use runner::{
    prepare_workspace, run_suite, run_task, FaultSpec, LiveRunner, RunRecord, Runner, ScriptedRunner, TraceReplayRunner,
};
pub use task::{
    load_task, load_task_suite, Category, GroundTruthTrace, LoadedTask, Manifest, StepSpec, Suite, SuiteError, TaskSpec,
};
