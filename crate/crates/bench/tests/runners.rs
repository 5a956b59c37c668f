use std::path::Path;

use shapegpt_agent::{CallRecord, FaultMode, SessionConfig};
use shapegpt_bench::{
    compute_metrics, load_task_suite, run_suite, run_task, FaultSpec, LoadedTask, RunRecord, Runner, ScriptedRunner, Suite,
    TraceReplayRunner,
};
use shapegpt_tools::{invoke, validate_call, Registry, Workspace};

fn suite(reg: &Registry) -> Suite {
    load_task_suite(Path::new(env!("CARGO_MANIFEST_DIR")).join("suite"), reg).unwrap()
}

fn traces(s: &Suite) -> Vec<shapegpt_bench::GroundTruthTrace> {
    s.tasks.iter().map(|t| t.trace.clone()).collect()
}

#[test]
fn trace_replay_is_perfect() {
    let reg = Registry::builtin();
    let s = suite(&reg);
    let outs = run_suite(&s, &reg, &TraceReplayRunner { cfg: SessionConfig::default() });
    let m = compute_metrics(&outs, &traces(&s));
    for o in &outs {
        assert!(o.success, "{}: {:?}", o.task_id, o.failure);
    }
    assert_eq!((m.success_rate, m.accuracy, m.parameter_accuracy, m.repetition_rate), (1.0, 1.0, 1.0, 0.0));
}

#[test]
fn scripted_sessions_are_perfect() {
    let reg = Registry::builtin();
    let s = suite(&reg);
    let outs = run_suite(&s, &reg, &ScriptedRunner::new(SessionConfig::default()));
    let m = compute_metrics(&outs, &traces(&s));
    assert_eq!((m.success_rate, m.accuracy, m.parameter_accuracy, m.repetition_rate), (1.0, 1.0, 1.0, 0.0));
    assert!(outs.iter().all(|o| !o.events.is_empty()));
}

/// Replays the trace with every call issued twice.
struct Doubling;

impl Runner for Doubling {
    fn run(&self, task: &LoadedTask, ws: &mut Workspace, reg: &Registry) -> RunRecord {
        let mut rec = RunRecord::default();
        for c in task.trace.calls.iter().flat_map(|c| [c, c]) {
            let r = invoke(c, ws, reg, &Default::default());
            rec.calls.push(CallRecord { call: c.clone(), verdict: validate_call(c, reg), status: r.status });
        }
        rec
    }
}

/// Issues calls that never validate.
struct Broken;

impl Runner for Broken {
    fn run(&self, task: &LoadedTask, ws: &mut Workspace, reg: &Registry) -> RunRecord {
        let mut rec = RunRecord { had_exception: true, ..Default::default() };
        for c in &task.trace.calls {
            let mut bad = c.clone();
            bad.name.push_str("_x");
            let r = invoke(&bad, ws, reg, &Default::default());
            rec.calls.push(CallRecord { verdict: validate_call(&bad, reg), call: bad, status: r.status });
        }
        rec
    }
}

#[test]
fn doubled_calls_count_as_repetition() {
    let reg = Registry::builtin();
    let s = suite(&reg);
    let outs: Vec<_> = s.tasks.iter().take(6).map(|t| run_task(t, &reg, &Doubling)).collect();
    let tr: Vec<_> = s.tasks.iter().take(6).map(|t| t.trace.clone()).collect();
    let m = compute_metrics(&outs, &tr);
    assert_eq!(m.repetition_rate, 1.0);
    assert_eq!(m.parameter_accuracy, 1.0);
    assert_eq!(m.success_rate, 1.0);
}

#[test]
fn broken_calls_fail_everything() {
    let reg = Registry::builtin();
    let s = suite(&reg);
    let outs: Vec<_> = s.tasks.iter().take(6).map(|t| run_task(t, &reg, &Broken)).collect();
    let tr: Vec<_> = s.tasks.iter().take(6).map(|t| t.trace.clone()).collect();
    let m = compute_metrics(&outs, &tr);
    assert_eq!((m.success_rate, m.accuracy, m.parameter_accuracy), (0.0, 0.0, 0.0));
    assert!(outs.iter().all(|o| o.failure.is_some()));
}

#[test]
fn planner_recovers_injected_faults() {
    let reg = Registry::builtin();
    let s = suite(&reg);
    let fault = Some(FaultSpec { seed: 7, p: 1.0, mode: FaultMode::GiveUp });
    let on = ScriptedRunner { cfg: SessionConfig::default(), fault, max_attempts: 10 };
    let off = ScriptedRunner { cfg: SessionConfig { planner_enabled: false, ..SessionConfig::default() }, fault, max_attempts: 10 };
    let tr = traces(&s);
    let m_on = compute_metrics(&run_suite(&s, &reg, &on), &tr);
    let m_off = compute_metrics(&run_suite(&s, &reg, &off), &tr);
    assert_eq!(m_on.success_rate, 1.0);
    assert!(m_on.accuracy < 1.0);
    assert!(m_off.successes <= m_on.successes);
}
