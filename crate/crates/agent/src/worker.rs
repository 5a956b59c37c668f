//! Worker loop: pick tools for one subtask, run them, report back.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use shapegpt_core::shapefile::DatasetSummary;
use shapegpt_tools::{export_schemas, invoke, validate_call, wire_declarations, DocFormat, ExecError, Registry, ToolCall, ToolResult, Verdict, Workspace};

use crate::chat::{llm_chat, ChatClient, ChatTurn};
use crate::config::SessionConfig;
use crate::events::{EventKind, EventLog};
use crate::planner::Subtask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallOutcome {
    pub call: ToolCall,
    pub verdict: Verdict,
    pub result: ToolResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerReport {
    pub subtask_id: u32,
    pub calls: Vec<CallOutcome>,
    pub success: bool,
    pub summary: String,
    /// Model exchanges used.
    pub exchanges: usize,
    pub model_error: bool,
}

/// Per-session material shared by every worker step.
pub struct WorkerContext<'a> {
    pub registry: &'a Registry,
    pub cfg: &'a SessionConfig,
    /// Input files with their summaries.
    pub inputs: &'a [(String, DatasetSummary)],
    tool_docs: String,
    declarations: Vec<Value>,
}

impl<'a> WorkerContext<'a> {
    pub fn new(registry: &'a Registry, cfg: &'a SessionConfig, inputs: &'a [(String, DatasetSummary)]) -> Self {
        WorkerContext {
            registry,
            cfg,
            inputs,
            tool_docs: export_schemas(registry, DocFormat::Yaml),
            declarations: wire_declarations(registry),
        }
    }

    pub fn system_prompt(&self, ws: &Workspace) -> String {
        let mut s = self.cfg.prompts.worker.trim_end().to_string();
        s.push_str("\n\n# Tools\n");
        s.push_str(&self.tool_docs);
        if !self.inputs.is_empty() {
            s.push_str("\n# Input files\n");
            for (path, summary) in self.inputs {
                let _ = writeln!(s, "## {path}\n{}", summary.to_text());
            }
        }
        s.push_str("\n# Layers in memory\n");
        if ws.layers().is_empty() {
            s.push_str("(none)\n");
        }
        for (handle, d) in ws.layers() {
            let text = shapegpt_core::shapefile::describe_dataset(d, 3).to_text();
            let _ = writeln!(s, "## {handle}\n{text}");
        }
        if self.cfg.task_example {
            s.push_str("\n# Example task\n");
            s.push_str(&self.cfg.prompts.task_example);
        }
        if self.cfg.api_example {
            s.push_str("\n# Example calls\n");
            s.push_str(&self.cfg.prompts.api_example);
        }
        s
    }
}

/// Runs one subtask. Tool failures go back to the model as tool turns; the
/// loop ends on a plain-text reply or once the call budget is spent. Every
/// exchange that does not end the loop runs at least one call, so a step
/// uses at most `max_worker_calls_per_subtask` exchanges.
pub fn worker_step(
    subtask: &Subtask,
    ws: &mut Workspace,
    ctx: &WorkerContext<'_>,
    client: &mut dyn ChatClient,
    log: &EventLog,
) -> WorkerReport {
    let budget = ctx.cfg.max_worker_calls_per_subtask;
    let mut turns = vec![ChatTurn::system(ctx.system_prompt(ws)), ChatTurn::user(subtask.instruction.clone())];
    let mut report = WorkerReport {
        subtask_id: subtask.id,
        calls: Vec::new(),
        success: false,
        summary: String::new(),
        exchanges: 0,
        model_error: false,
    };
    loop {
        if report.calls.len() >= budget {
            report.summary = format!("call limit of {budget} reached");
            break;
        }
        report.exchanges += 1;
        let reply = match llm_chat(client, &turns, Some(&ctx.declarations)) {
            Ok(r) => r,
            Err(e) => {
                log.push(EventKind::ModelError { agent: "worker".into(), message: e.to_string() });
                report.model_error = true;
                report.summary = e.to_string();
                break;
            }
        };
        if reply.tool_calls.is_empty() {
            report.success = report.calls.last().is_some_and(|c| c.result.is_ok());
            report.summary = reply.content;
            break;
        }
        let requests = reply.tool_calls.clone();
        turns.push(reply);
        for req in requests {
            if report.calls.len() >= budget {
                break;
            }
            let verdict = validate_call(&req.call, ctx.registry);
            log.push(EventKind::ToolCall {
                subtask_id: subtask.id,
                call_id: req.id.clone(),
                call: req.call.clone(),
                verdict: verdict.clone(),
            });
            let result = if verdict.is_valid() {
                invoke(&req.call, ws, ctx.registry, &ctx.cfg.geometry)
            } else {
                ToolResult::error(&ExecError::Validation(verdict.clone()))
            };
            log.push(EventKind::ToolResult { subtask_id: subtask.id, call_id: req.id.clone(), result: result.clone() });
            turns.push(ChatTurn::tool(req.id, result.message.clone()));
            report.calls.push(CallOutcome { call: req.call, verdict, result });
        }
    }
    report
}
