use std::path::Path;

use shapegpt_agent::{
    run_session, Agents, CallRecord, Event, EventLog, FaultInjectingWorker, FaultMode, PolicyPlannerClient, RemoteClient,
    RemoteConfig, ScriptedWorker, Scripts, SessionConfig,
};
use shapegpt_tools::{invoke, validate_call, Registry, Workspace};

use crate::grade::{grade_output, Grade};
use crate::metrics::TaskOutcome;
use crate::task::{LoadedTask, Suite};

/// What a runner reports for one task, before grading.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    pub calls: Vec<CallRecord>,
    pub had_exception: bool,
    pub events: Vec<Event>,
}

pub trait Runner: Sync {
    fn run(&self, task: &LoadedTask, ws: &mut Workspace, registry: &Registry) -> RunRecord;
}

/// Invokes the ground-truth trace directly, without any agent.
pub struct TraceReplayRunner {
    pub cfg: SessionConfig,
}

impl Runner for TraceReplayRunner {
    fn run(&self, task: &LoadedTask, ws: &mut Workspace, registry: &Registry) -> RunRecord {
        let mut rec = RunRecord::default();
        for call in &task.trace.calls {
            let verdict = validate_call(call, registry);
            let result = invoke(call, ws, registry, &self.cfg.geometry);
            rec.had_exception |= !result.is_ok();
            rec.calls.push(CallRecord { call: call.clone(), verdict, status: result.status });
        }
        rec
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub seed: u64,
    pub p: f64,
    pub mode: FaultMode,
}

/// Full planner/worker sessions with scripted clients built from the task's
/// plan and trace, optionally with fault injection in the worker.
pub struct ScriptedRunner {
    pub cfg: SessionConfig,
    pub fault: Option<FaultSpec>,
    /// Attempts the scripted planner allows per subtask.
    pub max_attempts: usize,
}

impl ScriptedRunner {
    pub fn new(cfg: SessionConfig) -> Self {
        ScriptedRunner { cfg, fault: None, max_attempts: 3 }
    }
}

/// Per-task seed: FNV-1a of the task id mixed into the base seed.
fn task_seed(base: u64, task_id: &str) -> u64 {
    task_id.bytes().fold(0xcbf2_9ce4_8422_2325u64 ^ base, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl Runner for ScriptedRunner {
    fn run(&self, task: &LoadedTask, ws: &mut Workspace, registry: &Registry) -> RunRecord {
        let steps = task.plan_steps();
        let goal = task.spec.user_prompt.as_str();
        let scripts = Scripts::from_plan(goal, &steps);
        let mut planner = PolicyPlannerClient::new(steps.iter().map(|s| s.instruction.clone()), self.max_attempts);
        let mut worker: Box<dyn shapegpt_agent::ChatClient> = match self.fault {
            None => Box::new(ScriptedWorker::new(scripts)),
            Some(f) => Box::new(FaultInjectingWorker::new(scripts, registry.clone(), task_seed(f.seed, &task.spec.task_id), f.p, f.mode)),
        };
        let log = EventLog::new();
        let out = run_session(
            goal,
            &task.spec.input_paths,
            ws,
            registry,
            &self.cfg,
            Agents { planner: &mut planner, worker: &mut worker },
            &log,
        );
        RunRecord { calls: out.calls, had_exception: out.had_exception, events: out.events }
    }
}

/// Sessions against a chat-completions endpoint for both agents.
pub struct LiveRunner {
    pub cfg: SessionConfig,
    pub remote: RemoteConfig,
}

impl Runner for LiveRunner {
    fn run(&self, task: &LoadedTask, ws: &mut Workspace, registry: &Registry) -> RunRecord {
        let mut planner = RemoteClient::new(self.remote.clone());
        let mut worker = RemoteClient::new(self.remote.clone());
        let log = EventLog::new();
        let out = run_session(
            &task.spec.user_prompt,
            &task.spec.input_paths,
            ws,
            registry,
            &self.cfg,
            Agents { planner: &mut planner, worker: &mut worker },
            &log,
        );
        RunRecord { calls: out.calls, had_exception: out.had_exception, events: out.events }
    }
}

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(to)?;
    for e in std::fs::read_dir(from)? {
        let e = e?;
        let target = to.join(e.file_name());
        if e.file_type()?.is_dir() {
            copy_dir(&e.path(), &target)?;
        } else {
            std::fs::copy(e.path(), target)?;
        }
    }
    Ok(())
}

/// Fresh workspace under `dir` holding a copy of the task's input files.
pub fn prepare_workspace(task: &LoadedTask, dir: &Path) -> std::io::Result<Workspace> {
    let ws = Workspace::new(dir)?;
    let mut roots: Vec<&str> = task.spec.input_paths.iter().filter_map(|p| p.split('/').next()).collect();
    roots.sort_unstable();
    roots.dedup();
    for r in roots {
        let src = task.dir.join(r);
        if src.is_dir() {
            copy_dir(&src, &ws.sandbox_dir().join(r))?;
        } else if src.is_file() {
            std::fs::copy(&src, ws.sandbox_dir().join(r))?;
        }
    }
    Ok(ws)
}

/// Runs one task in a fresh temporary workspace and grades its outputs.
pub fn run_task(task: &LoadedTask, registry: &Registry, runner: &dyn Runner) -> TaskOutcome {
    let mut outcome = TaskOutcome {
        task_id: task.spec.task_id.clone(),
        category: task.spec.category,
        produced_outputs: Vec::new(),
        success: false,
        had_exception: true,
        calls: Vec::new(),
        failure: None,
        events: Vec::new(),
    };
    let tmp = match tempfile::tempdir() {
        Ok(t) => t,
        Err(e) => {
            outcome.failure = Some(format!("no workspace: {e}"));
            return outcome;
        }
    };
    let mut ws = match prepare_workspace(task, &tmp.path().join("sandbox")) {
        Ok(ws) => ws,
        Err(e) => {
            outcome.failure = Some(format!("cannot stage inputs: {e}"));
            return outcome;
        }
    };
    let rec = runner.run(task, &mut ws, registry);
    outcome.calls = rec.calls;
    outcome.had_exception = rec.had_exception;
    outcome.events = rec.events;
    let mut failures = Vec::new();
    for out in &task.spec.output_paths {
        let actual = ws.sandbox_dir().join(out);
        if actual.is_file() {
            outcome.produced_outputs.push(out.clone());
        }
        match grade_output(&task.expected_path(out), &actual) {
            Ok(Grade::Pass) => {}
            Ok(Grade::Fail(r)) => failures.push(format!("{out}: {r}")),
            Err(e) => failures.push(format!("{out}: {e}")),
        }
    }
    outcome.success = failures.is_empty();
    if !failures.is_empty() {
        outcome.failure = Some(failures.join("; "));
    }
    outcome
}

/// Runs every task, a few at a time; outcomes come back in suite order.
pub fn run_suite(suite: &Suite, registry: &Registry, runner: &dyn Runner) -> Vec<TaskOutcome> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let chunk = suite.tasks.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = suite
            .tasks
            .chunks(chunk)
            .map(|tasks| s.spawn(move || tasks.iter().map(|t| run_task(t, registry, runner)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("task runner panicked")).collect()
    })
}
