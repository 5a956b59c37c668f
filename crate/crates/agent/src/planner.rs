//! Planner state machine: observe goal and memory, emit a subtask or finish.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chat::{llm_chat, ChatClient, ChatError, ChatTurn};
use crate::config::SessionConfig;
use crate::events::{EventKind, EventLog};
use crate::worker::WorkerReport;

pub const REASK: &str = "That reply was not a valid envelope. Answer with exactly one JSON object: \
{\"subtask\": \"...\"} or {\"finish\": \"...\", \"success\": true|false}.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtaskStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub id: u32,
    pub instruction: String,
    pub status: SubtaskStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlannerDecision {
    Emit(Subtask),
    Finish { success: bool, summary: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerState {
    pub user_goal: String,
    pub memory: Vec<(Subtask, WorkerReport)>,
    pub done: bool,
    pub iterations_used: usize,
    next_id: u32,
}

impl PlannerState {
    pub fn new(goal: impl Into<String>) -> PlannerState {
        PlannerState { user_goal: goal.into(), memory: Vec::new(), done: false, iterations_used: 0, next_id: 1 }
    }

    /// Stores the outcome of an emitted subtask.
    pub fn record(&mut self, mut subtask: Subtask, report: WorkerReport) {
        subtask.status = if report.success { SubtaskStatus::Done } else { SubtaskStatus::Failed };
        self.memory.push((subtask, report));
    }

    /// The planner's view of memory, as sent to the model.
    pub fn memory_json(&self) -> Value {
        Value::Array(
            self.memory
                .iter()
                .map(|(s, r)| json!({"id": s.id, "instruction": s.instruction, "success": r.success, "summary": r.summary}))
                .collect(),
        )
    }

    pub fn observation(&self) -> String {
        format!("goal: {}\nmemory: {}\nWhat next?", self.user_goal, self.memory_json())
    }

    fn finish(&mut self, success: bool, summary: String) -> PlannerDecision {
        self.done = true;
        PlannerDecision::Finish { success, summary }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    Subtask(String),
    Finish { summary: String, success: Option<bool> },
}

/// Parses the first JSON object in `text` as a planner envelope.
pub fn parse_envelope(text: &str) -> Result<Envelope, String> {
    let start = text.find('{').ok_or("no JSON object in reply")?;
    let v = serde_json::Deserializer::from_str(&text[start..])
        .into_iter::<Value>()
        .next()
        .ok_or("no JSON object in reply")?
        .map_err(|e| format!("bad JSON: {e}"))?;
    let obj = v.as_object().ok_or("envelope is not an object")?;
    match (obj.get("subtask"), obj.get("finish")) {
        (Some(Value::String(s)), None) if !s.trim().is_empty() => Ok(Envelope::Subtask(s.trim().to_string())),
        (None, Some(Value::String(s))) => {
            let success = match obj.get("success") {
                None | Some(Value::Null) => None,
                Some(Value::Bool(b)) => Some(*b),
                Some(_) => return Err("success must be a boolean".into()),
            };
            Ok(Envelope::Finish { summary: s.clone(), success })
        }
        (Some(_), Some(_)) => Err("envelope has both subtask and finish".into()),
        _ => Err("envelope needs a non-empty subtask or a finish summary".into()),
    }
}

/// One planner decision. Every model exchange, re-asks included, uses one
/// iteration; at the cap the planner finishes as failed without asking.
pub fn planner_step(
    state: &mut PlannerState,
    cfg: &SessionConfig,
    client: &mut dyn ChatClient,
    log: &EventLog,
) -> PlannerDecision {
    assert!(!state.done, "planner_step on a finished state");
    let cap = cfg.max_planner_iterations;
    let mut turns = vec![ChatTurn::system(cfg.prompts.planner.clone()), ChatTurn::user(state.observation())];
    let mut reasked = false;
    loop {
        if state.iterations_used >= cap {
            return state.finish(false, format!("stopped after {cap} planner iterations"));
        }
        state.iterations_used += 1;
        let reply = match llm_chat(client, &turns, None) {
            Ok(r) => r,
            Err(ChatError::MalformedModelOutput(m)) => {
                log.push(EventKind::ModelError { agent: "planner".into(), message: m });
                if reasked {
                    return state.finish(false, "planner output unreadable".into());
                }
                reasked = true;
                turns.push(ChatTurn::user(REASK));
                continue;
            }
            Err(e) => {
                log.push(EventKind::ModelError { agent: "planner".into(), message: e.to_string() });
                return state.finish(false, format!("planner unavailable: {e}"));
            }
        };
        match parse_envelope(&reply.content) {
            Ok(Envelope::Subtask(instruction)) => {
                let s = Subtask { id: state.next_id, instruction, status: SubtaskStatus::Pending };
                state.next_id += 1;
                return PlannerDecision::Emit(s);
            }
            Ok(Envelope::Finish { summary, success }) => {
                let ok = success.unwrap_or_else(|| state.memory.last().is_some_and(|(_, r)| r.success));
                return state.finish(ok, summary);
            }
            Err(m) => {
                log.push(EventKind::ModelError { agent: "planner".into(), message: m });
                if reasked {
                    return state.finish(false, "planner output unreadable".into());
                }
                reasked = true;
                turns.push(reply);
                turns.push(ChatTurn::user(REASK));
            }
        }
    }
}
