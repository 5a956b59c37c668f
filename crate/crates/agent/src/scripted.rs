//! Deterministic clients for tests and benchmark replay.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use shapegpt_tools::{Registry, ToolCall};

use crate::chat::{CallRequest, ChatClient, ChatError, ChatTurn, Role};

/// One planned subtask and the calls that solve it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub instruction: String,
    pub calls: Vec<ToolCall>,
}

fn envelope(v: Value) -> Result<ChatTurn, ChatError> {
    Ok(ChatTurn::assistant(v.to_string()))
}

/// Planner that walks a fixed plan, reading progress from the memory line of
/// the observation. A failed step is sent again until it has been tried
/// `max_attempts` times.
#[derive(Debug, Clone)]
pub struct PolicyPlannerClient {
    plan: Vec<String>,
    max_attempts: usize,
}

impl PolicyPlannerClient {
    pub fn new(plan: impl IntoIterator<Item = impl Into<String>>, max_attempts: usize) -> Self {
        PolicyPlannerClient { plan: plan.into_iter().map(Into::into).collect(), max_attempts }
    }
}

fn memory_of(turns: &[ChatTurn]) -> Vec<(String, bool)> {
    let obs = turns.iter().find(|t| t.role == Role::User).map(|t| t.content.as_str()).unwrap_or("");
    let line = obs.lines().find_map(|l| l.strip_prefix("memory: ")).unwrap_or("[]");
    let mem: Vec<Value> = serde_json::from_str(line).unwrap_or_default();
    mem.iter()
        .map(|m| {
            (
                m["instruction"].as_str().unwrap_or_default().to_string(),
                m["success"].as_bool().unwrap_or(false),
            )
        })
        .collect()
}

impl ChatClient for PolicyPlannerClient {
    fn chat(&mut self, turns: &[ChatTurn], _: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        let mem = memory_of(turns);
        if self.plan.is_empty() {
            return envelope(json!({"finish": "nothing to do", "success": false}));
        }
        for step in &self.plan {
            if mem.iter().any(|(i, ok)| i == step && *ok) {
                continue;
            }
            let tries = mem.iter().filter(|(i, _)| i == step).count();
            if tries >= self.max_attempts {
                return envelope(json!({"finish": format!("gave up on: {step}"), "success": false}));
            }
            return envelope(json!({ "subtask": step }));
        }
        envelope(json!({"finish": format!("completed {} steps", self.plan.len()), "success": true}))
    }
}

/// Scripts keyed by instruction. Under `from_plan` the goal itself maps to
/// every step's calls in order, for sessions without a planner.
#[derive(Debug, Clone, Default)]
pub struct Scripts {
    by_instruction: BTreeMap<String, Vec<ToolCall>>,
}

impl Scripts {
    pub fn from_plan(goal: &str, steps: &[PlanStep]) -> Scripts {
        let mut by_instruction = BTreeMap::new();
        for s in steps {
            by_instruction.insert(s.instruction.clone(), s.calls.clone());
        }
        by_instruction.insert(goal.to_string(), steps.iter().flat_map(|s| s.calls.clone()).collect());
        Scripts { by_instruction }
    }

    pub fn insert(&mut self, instruction: impl Into<String>, calls: Vec<ToolCall>) {
        self.by_instruction.insert(instruction.into(), calls);
    }

    pub fn get(&self, instruction: &str) -> Option<&[ToolCall]> {
        self.by_instruction.get(instruction).map(Vec::as_slice)
    }
}

/// What the worker conversation so far says about progress.
struct Progress<'t> {
    instruction: &'t str,
    ok_results: usize,
    last_error: Option<&'t str>,
}

fn progress(turns: &[ChatTurn]) -> Progress<'_> {
    let instruction = turns.iter().find(|t| t.role == Role::User).map(|t| t.content.as_str()).unwrap_or("");
    let results: Vec<&ChatTurn> = turns.iter().filter(|t| t.role == Role::Tool).collect();
    let is_err = |t: &&ChatTurn| t.content.starts_with("error (");
    Progress {
        instruction,
        ok_results: results.iter().filter(|t| !is_err(t)).count(),
        last_error: results.last().copied().filter(|t| is_err(&t)).map(|t| t.content.as_str()),
    }
}

fn call_turn(turns: &[ChatTurn], call: ToolCall) -> Result<ChatTurn, ChatError> {
    Ok(ChatTurn::assistant_calls(vec![CallRequest { id: format!("call_{}", turns.len()), call }]))
}

/// Worker that issues its script's next call (the one after the last
/// successful result) and stops with a text reply when done or on an error.
#[derive(Debug, Clone)]
pub struct ScriptedWorker {
    scripts: Scripts,
}

impl ScriptedWorker {
    pub fn new(scripts: Scripts) -> Self {
        ScriptedWorker { scripts }
    }
}

impl ChatClient for ScriptedWorker {
    fn chat(&mut self, turns: &[ChatTurn], _: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        let p = progress(turns);
        let Some(calls) = self.scripts.get(p.instruction) else {
            return Ok(ChatTurn::assistant(format!("failed: no script for '{}'", p.instruction)));
        };
        if let Some(e) = p.last_error {
            return Ok(ChatTurn::assistant(format!("failed: {e}")));
        }
        match calls.get(p.ok_results) {
            Some(c) => call_turn(turns, c.clone()),
            None => Ok(ChatTurn::assistant(format!("done: {} calls", calls.len()))),
        }
    }
}

/// What a fault-injecting worker does after one of its faults fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultMode {
    /// Send the corrected call in the same subtask.
    Retry,
    /// Report failure and leave the retry to the planner.
    GiveUp,
}

/// Scripted worker whose first attempt at each script position is, with
/// probability `p`, sent with a required argument missing.
pub struct FaultInjectingWorker {
    scripts: Scripts,
    registry: Registry,
    rng: ChaCha8Rng,
    p: f64,
    mode: FaultMode,
    attempts: HashMap<(String, usize), usize>,
    last_was_fault: bool,
    faults: usize,
}

impl FaultInjectingWorker {
    pub fn new(scripts: Scripts, registry: Registry, seed: u64, p: f64, mode: FaultMode) -> Self {
        FaultInjectingWorker {
            scripts,
            registry,
            rng: ChaCha8Rng::seed_from_u64(seed),
            p,
            mode,
            attempts: HashMap::new(),
            last_was_fault: false,
            faults: 0,
        }
    }

    /// Faults injected so far.
    pub fn faults(&self) -> usize {
        self.faults
    }

    fn corrupt(&self, call: &ToolCall) -> ToolCall {
        let mut bad = call.clone();
        let required = self
            .registry
            .get(&call.name)
            .and_then(|spec| spec.params.iter().find(|p| p.required && call.arguments.contains_key(&p.name)));
        match required {
            Some(p) => {
                bad.arguments.shift_remove(&p.name);
            }
            None => bad.name.push_str("_v2"),
        }
        bad
    }
}

impl ChatClient for FaultInjectingWorker {
    fn chat(&mut self, turns: &[ChatTurn], _: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        let p = progress(turns);
        let Some(calls) = self.scripts.get(p.instruction).map(<[ToolCall]>::to_vec) else {
            return Ok(ChatTurn::assistant(format!("failed: no script for '{}'", p.instruction)));
        };
        if let Some(e) = p.last_error {
            if !(self.last_was_fault && self.mode == FaultMode::Retry) {
                self.last_was_fault = false;
                return Ok(ChatTurn::assistant(format!("failed: {e}")));
            }
        }
        let Some(call) = calls.get(p.ok_results).cloned() else {
            self.last_was_fault = false;
            return Ok(ChatTurn::assistant(format!("done: {} calls", calls.len())));
        };
        let n = self.attempts.entry((p.instruction.to_string(), p.ok_results)).or_insert(0);
        *n += 1;
        let fault = *n == 1 && self.p > 0.0 && self.rng.gen_bool(self.p.min(1.0));
        self.last_was_fault = fault;
        if fault {
            self.faults += 1;
            let bad = self.corrupt(&call);
            return call_turn(turns, bad);
        }
        call_turn(turns, call)
    }
}

/// Model stand-in that answers at random, badly: bogus envelopes, endless
/// subtasks, unknown tools, malformed or empty replies, transport failures.
pub struct ChaosClient {
    rng: ChaCha8Rng,
}

impl ChaosClient {
    pub fn new(seed: u64) -> Self {
        ChaosClient { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl ChatClient for ChaosClient {
    fn chat(&mut self, turns: &[ChatTurn], _: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        let k = self.rng.gen_range(0..10);
        let id = format!("call_{}", turns.len());
        let call = |name: &str, args: Value| Ok(ChatTurn::assistant_calls(vec![CallRequest { id: id.clone(), call: ToolCall::new(name, args) }]));
        match k {
            0 | 1 => envelope(json!({ "subtask": format!("step {}", self.rng.gen_range(0..3)) })),
            2 => Ok(ChatTurn::assistant("I am not sure what to do next.")),
            3 => Err(ChatError::MalformedModelOutput("unparseable tool arguments".into())),
            4 => Err(ChatError::Transport("connection reset".into())),
            5 => call("teleport_layer", json!({"layer": "x"})),
            6 => call("buffer", json!({"layer": "missing", "distance": 5})),
            7 => call("clip", json!({"layer": 3})),
            8 => Ok(ChatTurn::assistant("")),
            _ => {
                if self.rng.gen_bool(0.05) {
                    envelope(json!({"finish": "giving up", "success": false}))
                } else {
                    call("describe_shapefile", json!({"layer": "nowhere"}))
                }
            }
        }
    }
}
