//! Task suite on disk: `manifest.json` plus one directory per task.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use shapegpt_agent::PlanStep;
use shapegpt_tools::{validate_call, Registry, ToolCall, Verdict};

pub const MANIFEST: &str = "manifest.json";
pub const TASK_FILE: &str = "task.json";
pub const PROMPT_FILE: &str = "prompt.txt";
pub const TRACE_FILE: &str = "trace.json";
pub const EXPECTED_DIR: &str = "expected";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "Geometric Operations")]
    GeometricOperations,
    #[serde(rename = "Queries and Computations")]
    QueriesAndComputations,
    #[serde(rename = "Distance and Direction")]
    DistanceAndDirection,
    #[serde(rename = "Other")]
    Other,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::GeometricOperations,
        Category::QueriesAndComputations,
        Category::DistanceAndDirection,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::GeometricOperations => "Geometric Operations",
            Category::QueriesAndComputations => "Queries and Computations",
            Category::DistanceAndDirection => "Distance and Direction",
            Category::Other => "Other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A planned subtask: its instruction and how many trace calls it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub instruction: String,
    pub calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub geometry_type: String,
    pub category: Category,
    pub description: String,
    pub input_paths: Vec<String>,
    pub output_paths: Vec<String>,
    pub user_prompt: String,
    /// Reference decomposition of the trace, used by scripted planners.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plan: Vec<StepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTrace {
    pub task_id: String,
    pub calls: Vec<ToolCall>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub tasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTask {
    pub spec: TaskSpec,
    pub trace: GroundTruthTrace,
    pub dir: PathBuf,
}

impl LoadedTask {
    /// The trace split into the planned subtasks; one step with the prompt
    /// when the task has no plan.
    pub fn plan_steps(&self) -> Vec<PlanStep> {
        if self.spec.plan.is_empty() {
            return vec![PlanStep { instruction: self.spec.user_prompt.clone(), calls: self.trace.calls.clone() }];
        }
        let mut rest = self.trace.calls.as_slice();
        self.spec
            .plan
            .iter()
            .map(|s| {
                let (head, tail) = rest.split_at(s.calls);
                rest = tail;
                PlanStep { instruction: s.instruction.clone(), calls: head.to_vec() }
            })
            .collect()
    }

    pub fn expected_path(&self, output: &str) -> PathBuf {
        let name = Path::new(output).file_name().map(PathBuf::from).unwrap_or_default();
        self.dir.join(EXPECTED_DIR).join(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub name: String,
    pub root: PathBuf,
    pub tasks: Vec<LoadedTask>,
}

impl Suite {
    pub fn category_counts(&self) -> BTreeMap<Category, usize> {
        let mut m: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 0)).collect();
        for t in &self.tasks {
            *m.entry(t.spec.category).or_default() += 1;
        }
        m
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("malformed task {task}: {reason}")]
    MalformedTask { task: String, reason: String },
    #[error("trace of {task} fails validation at call {index} ({call}): {verdict}")]
    TraceValidationFailure { task: String, index: usize, call: String, verdict: Verdict },
}

fn malformed(task: &str, reason: impl Into<String>) -> SuiteError {
    SuiteError::MalformedTask { task: task.to_string(), reason: reason.into() }
}

fn read_json<T: serde::de::DeserializeOwned>(task: &str, path: &Path) -> Result<T, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|e| malformed(task, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| malformed(task, format!("{}: {e}", path.display())))
}

fn check_relative(task: &str, p: &str) -> Result<(), SuiteError> {
    let path = Path::new(p);
    if p.is_empty() || path.is_absolute() || path.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
        return Err(malformed(task, format!("path '{p}' must be relative and inside the task")));
    }
    Ok(())
}

/// Loads and checks one task directory.
pub fn load_task(dir: &Path, registry: &Registry) -> Result<LoadedTask, SuiteError> {
    let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut spec: TaskSpec = read_json(&id, &dir.join(TASK_FILE))?;
    if spec.task_id != id {
        return Err(malformed(&id, format!("task_id '{}' does not match its directory", spec.task_id)));
    }
    if let Ok(prompt) = std::fs::read_to_string(dir.join(PROMPT_FILE)) {
        spec.user_prompt = prompt.trim_end().to_string();
    }
    if spec.user_prompt.trim().is_empty() {
        return Err(malformed(&id, "empty user prompt"));
    }
    if spec.output_paths.is_empty() {
        return Err(malformed(&id, "no output paths"));
    }
    for p in spec.input_paths.iter().chain(&spec.output_paths) {
        check_relative(&id, p)?;
    }
    for p in &spec.input_paths {
        if !dir.join(p).is_file() {
            return Err(malformed(&id, format!("input '{p}' is missing from the bundle")));
        }
    }
    let calls: Vec<ToolCall> = read_json(&id, &dir.join(TRACE_FILE))?;
    if calls.is_empty() {
        return Err(malformed(&id, "empty trace"));
    }
    for (index, c) in calls.iter().enumerate() {
        let verdict = validate_call(c, registry);
        if !verdict.is_valid() {
            return Err(SuiteError::TraceValidationFailure { task: id, index, call: c.to_string(), verdict });
        }
    }
    if !spec.plan.is_empty() {
        let covered: usize = spec.plan.iter().map(|s| s.calls).sum();
        if covered != calls.len() || spec.plan.iter().any(|s| s.calls == 0) {
            return Err(malformed(&id, format!("plan covers {covered} calls, trace has {}", calls.len())));
        }
        let mut seen = std::collections::HashSet::new();
        if !spec.plan.iter().all(|s| seen.insert(s.instruction.as_str())) {
            return Err(malformed(&id, "plan instructions must be distinct"));
        }
    }
    Ok(LoadedTask { trace: GroundTruthTrace { task_id: id, calls }, spec, dir: dir.to_path_buf() })
}

/// Loads every task listed in the manifest under `dir`.
pub fn load_task_suite(dir: impl AsRef<Path>, registry: &Registry) -> Result<Suite, SuiteError> {
    let dir = dir.as_ref();
    let manifest: Manifest = read_json(MANIFEST, &dir.join(MANIFEST))?;
    if manifest.tasks.is_empty() {
        return Err(malformed(MANIFEST, "manifest lists no tasks"));
    }
    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for id in &manifest.tasks {
        check_relative(id, id)?;
        tasks.push(load_task(&dir.join(id), registry)?);
    }
    Ok(Suite { name: manifest.name, root: dir.to_path_buf(), tasks })
}
