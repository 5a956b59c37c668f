use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use shapegpt_core::shapefile::{describe_dataset, DatasetSummary};
use shapegpt_core::read_dataset;
use shapegpt_tools::{Registry, Status, ToolCall, Verdict, Workspace};

use crate::chat::ChatClient;
use crate::config::SessionConfig;
use crate::events::{Event, EventKind, EventLog};
use crate::planner::{planner_step, PlannerDecision, PlannerState, Subtask, SubtaskStatus};
use crate::worker::{worker_step, WorkerContext};

/// The two model clients driving a session.
pub struct Agents<'a> {
    pub planner: &'a mut dyn ChatClient,
    pub worker: &'a mut dyn ChatClient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub call: ToolCall,
    pub verdict: Verdict,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub success: bool,
    pub final_summary: String,
    /// Files written by the session's tools, absolute.
    pub artifacts: Vec<PathBuf>,
    pub events: Vec<Event>,
    pub calls: Vec<CallRecord>,
    /// Any rejected call, failed call, or unreadable model output.
    pub had_exception: bool,
    pub subtasks: usize,
    /// Model exchanges, planner and worker together.
    pub exchanges: usize,
}

/// Drives planner and worker until the planner finishes. `inputs` are paths
/// inside the workspace sandbox; each must read as a shapefile or the session
/// fails before any model is asked. The log is closed on return.
pub fn run_session(
    goal: &str,
    inputs: &[String],
    ws: &mut Workspace,
    registry: &Registry,
    cfg: &SessionConfig,
    agents: Agents<'_>,
    log: &EventLog,
) -> SessionOutcome {
    log.push(EventKind::SessionStarted {
        goal: goal.to_string(),
        planner_enabled: cfg.planner_enabled,
        inputs: inputs.to_vec(),
    });
    let mut summaries: Vec<(String, DatasetSummary)> = Vec::new();
    let mut input_failed = false;
    for p in inputs {
        let read = ws
            .resolve(p)
            .map_err(|e| e.to_string())
            .and_then(|abs| read_dataset(abs).map_err(|e| e.to_string()));
        match read {
            Ok(d) => summaries.push((p.clone(), describe_dataset(&d, 3))),
            Err(message) => {
                log.push(EventKind::InputError { path: p.clone(), message });
                input_failed = true;
            }
        }
    }
    let mut st = SessionState::default();
    let (success, summary) = if input_failed {
        (false, "input files could not be read".to_string())
    } else if let Err(e) = cfg.validate() {
        (false, e.to_string())
    } else {
        let ctx = WorkerContext::new(registry, cfg, &summaries);
        if cfg.planner_enabled {
            run_planned(goal, ws, &ctx, agents, log, &mut st)
        } else {
            run_direct(goal, ws, &ctx, agents, log, &mut st)
        }
    };
    log.push(EventKind::Finish { success, summary: summary.clone() });
    log.close();
    let had_exception = st.model_error
        || st.calls.iter().any(|c| !c.verdict.is_valid() || c.status == Status::Error);
    SessionOutcome {
        success,
        final_summary: summary,
        artifacts: ws.artifacts().to_vec(),
        events: log.snapshot(),
        calls: st.calls,
        had_exception,
        subtasks: st.subtasks,
        exchanges: st.exchanges,
    }
}

#[derive(Default)]
struct SessionState {
    calls: Vec<CallRecord>,
    subtasks: usize,
    exchanges: usize,
    model_error: bool,
}

impl SessionState {
    fn absorb(&mut self, report: &crate::worker::WorkerReport) {
        self.subtasks += 1;
        self.exchanges += report.exchanges;
        self.model_error |= report.model_error;
        self.calls.extend(report.calls.iter().map(|c| CallRecord {
            call: c.call.clone(),
            verdict: c.verdict.clone(),
            status: c.result.status,
        }));
    }
}

fn run_planned(
    goal: &str,
    ws: &mut Workspace,
    ctx: &WorkerContext<'_>,
    agents: Agents<'_>,
    log: &EventLog,
    st: &mut SessionState,
) -> (bool, String) {
    let mut state = PlannerState::new(goal);
    loop {
        let before = log.len();
        let decision = planner_step(&mut state, ctx.cfg, agents.planner, log);
        st.model_error |= log.since(before as u64).iter().any(|e| matches!(e.kind, EventKind::ModelError { .. }));
        match decision {
            PlannerDecision::Finish { success, summary } => {
                st.exchanges += state.iterations_used;
                return (success, summary);
            }
            PlannerDecision::Emit(mut sub) => {
                log.push(EventKind::SubtaskEmitted { subtask_id: sub.id, instruction: sub.instruction.clone() });
                sub.status = SubtaskStatus::Running;
                let report = worker_step(&sub, ws, ctx, agents.worker, log);
                log.push(EventKind::WorkerReport {
                    subtask_id: sub.id,
                    success: report.success,
                    summary: report.summary.clone(),
                });
                st.absorb(&report);
                state.record(sub, report);
            }
        }
    }
}

fn run_direct(
    goal: &str,
    ws: &mut Workspace,
    ctx: &WorkerContext<'_>,
    agents: Agents<'_>,
    log: &EventLog,
    st: &mut SessionState,
) -> (bool, String) {
    let sub = Subtask { id: 1, instruction: goal.to_string(), status: SubtaskStatus::Running };
    log.push(EventKind::SubtaskEmitted { subtask_id: 1, instruction: goal.to_string() });
    let report = worker_step(&sub, ws, ctx, agents.worker, log);
    log.push(EventKind::WorkerReport { subtask_id: 1, success: report.success, summary: report.summary.clone() });
    st.absorb(&report);
    (report.success, report.summary)
}

/// Canonical text of a call: keys sorted at every depth, numbers as f64.
pub fn canonical_call(call: &ToolCall) -> String {
    fn canon(v: &Value) -> Value {
        match v {
            Value::Number(n) => n.as_f64().map(Value::from).unwrap_or(Value::Null),
            Value::Array(a) => Value::Array(a.iter().map(canon).collect()),
            Value::Object(m) => {
                let sorted: BTreeMap<&String, Value> = m.iter().map(|(k, v)| (k, canon(v))).collect();
                Value::Object(sorted.into_iter().map(|(k, v)| (k.clone(), v)).collect())
            }
            other => other.clone(),
        }
    }
    let args = canon(&Value::Object(call.arguments.clone()));
    format!("{}{}", call.name, args)
}

/// Calls equal, after canonicalization, to an earlier call in the list.
pub fn count_repeated_calls(calls: &[ToolCall]) -> usize {
    let mut seen = HashSet::new();
    calls.iter().filter(|c| !seen.insert(canonical_call(c))).count()
}
