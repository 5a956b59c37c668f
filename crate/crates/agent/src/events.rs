//! Append-only session event log, readable while the session runs.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use shapegpt_tools::{ToolCall, ToolResult, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    SessionStarted {
        goal: String,
        planner_enabled: bool,
        inputs: Vec<String>,
    },
    InputError {
        path: String,
        message: String,
    },
    SubtaskEmitted {
        subtask_id: u32,
        instruction: String,
    },
    ToolCall {
        subtask_id: u32,
        call_id: String,
        call: ToolCall,
        verdict: Verdict,
    },
    ToolResult {
        subtask_id: u32,
        call_id: String,
        result: ToolResult,
    },
    WorkerReport {
        subtask_id: u32,
        success: bool,
        summary: String,
    },
    ModelError {
        agent: String,
        message: String,
    },
    Finish {
        success: bool,
        summary: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}

#[derive(Debug, Default)]
struct LogState {
    events: Vec<Event>,
    closed: bool,
}

/// Shared handle; clones see the same log.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    inner: Arc<(Mutex<LogState>, Condvar)>,
}

impl EventLog {
    pub fn new() -> EventLog {
        EventLog::default()
    }

    /// Appends an event and returns its sequence number (1-based).
    pub fn push(&self, kind: EventKind) -> u64 {
        let (lock, cv) = &*self.inner;
        let mut st = lock.lock().unwrap();
        let seq = st.events.len() as u64 + 1;
        st.events.push(Event { seq, kind });
        cv.notify_all();
        seq
    }

    pub fn close(&self) {
        let (lock, cv) = &*self.inner;
        lock.lock().unwrap().closed = true;
        cv.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.inner.0.lock().unwrap().closed
    }

    pub fn len(&self) -> usize {
        self.inner.0.lock().unwrap().events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<Event> {
        self.since(0)
    }

    /// Events with `seq > after`.
    pub fn since(&self, after: u64) -> Vec<Event> {
        let st = self.inner.0.lock().unwrap();
        st.events.iter().skip(after as usize).cloned().collect()
    }

    /// Blocks until there are events after `after`, the log closes, or the
    /// timeout passes. Returns the new events and whether the log is closed.
    pub fn wait_since(&self, after: u64, timeout: Duration) -> (Vec<Event>, bool) {
        let (lock, cv) = &*self.inner;
        let st = lock.lock().unwrap();
        let (st, _) = cv
            .wait_timeout_while(st, timeout, |s| s.events.len() as u64 <= after && !s.closed)
            .unwrap();
        (st.events.iter().skip(after as usize).cloned().collect(), st.closed)
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.snapshot().iter().map(|e| e.to_json() + "\n").collect()
    }
}
