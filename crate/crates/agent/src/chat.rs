//! The model contract: turns in, one turn out.

use std::collections::VecDeque;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use shapegpt_tools::ToolCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

/// A tool call requested by the model, with the id its result refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRequest {
    pub id: String,
    #[serde(flatten)]
    pub call: ToolCall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    #[serde(default)]
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<CallRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_result_for: Option<String>,
}

impl ChatTurn {
    pub fn system(content: impl Into<String>) -> ChatTurn {
        ChatTurn { role: Role::System, content: content.into(), tool_calls: vec![], tool_result_for: None }
    }

    pub fn user(content: impl Into<String>) -> ChatTurn {
        ChatTurn { role: Role::User, content: content.into(), tool_calls: vec![], tool_result_for: None }
    }

    pub fn assistant(content: impl Into<String>) -> ChatTurn {
        ChatTurn { role: Role::Assistant, content: content.into(), tool_calls: vec![], tool_result_for: None }
    }

    pub fn assistant_calls(calls: Vec<CallRequest>) -> ChatTurn {
        ChatTurn { role: Role::Assistant, content: String::new(), tool_calls: calls, tool_result_for: None }
    }

    pub fn tool(call_id: impl Into<String>, content: impl Into<String>) -> ChatTurn {
        ChatTurn { role: Role::Tool, content: content.into(), tool_calls: vec![], tool_result_for: Some(call_id.into()) }
    }

    /// A turn carries content, tool calls, or both.
    pub fn is_well_formed(&self) -> bool {
        !self.content.is_empty() || !self.tool_calls.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChatError {
    #[error("bad request: {0}")]
    Precondition(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed model output: {0}")]
    MalformedModelOutput(String),
}

pub trait ChatClient: Send {
    /// Next assistant turn for the conversation. `tools` holds wire
    /// declarations when tool calling is allowed.
    fn chat(&mut self, turns: &[ChatTurn], tools: Option<&[Value]>) -> Result<ChatTurn, ChatError>;
}

impl<C: ChatClient + ?Sized> ChatClient for Box<C> {
    fn chat(&mut self, turns: &[ChatTurn], tools: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        (**self).chat(turns, tools)
    }
}

/// Checks the request and the reply around a client call.
pub fn llm_chat(client: &mut dyn ChatClient, turns: &[ChatTurn], tools: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
    match turns.first() {
        None => return Err(ChatError::Precondition("no turns".into())),
        Some(t) if t.role != Role::System => return Err(ChatError::Precondition("first turn must be system".into())),
        _ => {}
    }
    let reply = client.chat(turns, tools)?;
    if reply.role != Role::Assistant || !reply.is_well_formed() {
        return Err(ChatError::MalformedModelOutput("reply has neither content nor tool calls".into()));
    }
    Ok(reply)
}

/// Replays canned turns in order, ignoring its input.
#[derive(Debug, Clone, Default)]
pub struct ScriptedClient {
    turns: VecDeque<ChatTurn>,
}

impl ScriptedClient {
    pub fn new(turns: impl IntoIterator<Item = ChatTurn>) -> ScriptedClient {
        ScriptedClient { turns: turns.into_iter().collect() }
    }

    pub fn remaining(&self) -> usize {
        self.turns.len()
    }
}

impl ChatClient for ScriptedClient {
    fn chat(&mut self, _: &[ChatTurn], _: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        self.turns.pop_front().ok_or_else(|| ChatError::Transport("script exhausted".into()))
    }
}

/// Settings for [`RemoteClient`].
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub url: String,
    pub model: String,
    pub key: Option<String>,
    pub timeout: Duration,
    pub retries: usize,
}

impl RemoteConfig {
    /// Reads SHAPEGPT_LLM_URL, SHAPEGPT_LLM_MODEL and SHAPEGPT_LLM_KEY.
    pub fn from_env() -> Option<RemoteConfig> {
        Some(RemoteConfig {
            url: std::env::var("SHAPEGPT_LLM_URL").ok()?,
            model: std::env::var("SHAPEGPT_LLM_MODEL").unwrap_or_else(|_| "gpt-4o".into()),
            key: std::env::var("SHAPEGPT_LLM_KEY").ok(),
            timeout: Duration::from_secs(120),
            retries: 2,
        })
    }
}

/// Chat-completions over HTTP.
pub struct RemoteClient {
    cfg: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(cfg: RemoteConfig) -> RemoteClient {
        let agent = ureq::Agent::config_builder().timeout_global(Some(cfg.timeout)).build().into();
        RemoteClient { cfg, agent }
    }

    fn post(&self, body: &Value) -> Result<Value, ChatError> {
        let mut req = self.agent.post(&self.cfg.url);
        if let Some(k) = &self.cfg.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(body).map_err(|e| ChatError::Transport(e.to_string()))?;
        resp.body_mut().read_json::<Value>().map_err(|e| ChatError::Transport(e.to_string()))
    }
}

impl ChatClient for RemoteClient {
    fn chat(&mut self, turns: &[ChatTurn], tools: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        let body = request_body(&self.cfg.model, turns, tools);
        let mut last = ChatError::Transport("no attempt made".into());
        for _ in 0..=self.cfg.retries {
            match self.post(&body) {
                Ok(v) => return parse_completion(&v),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}

/// Chat-completions request payload.
pub fn request_body(model: &str, turns: &[ChatTurn], tools: Option<&[Value]>) -> Value {
    let messages: Vec<Value> = turns
        .iter()
        .map(|t| match t.role {
            Role::Tool => json!({"role": "tool", "tool_call_id": t.tool_result_for, "content": t.content}),
            Role::Assistant if !t.tool_calls.is_empty() => json!({
                "role": "assistant",
                "content": if t.content.is_empty() { Value::Null } else { t.content.clone().into() },
                "tool_calls": t.tool_calls.iter().map(|c| json!({
                    "id": c.id,
                    "type": "function",
                    "function": {"name": c.call.name, "arguments": Value::Object(c.call.arguments.clone()).to_string()},
                })).collect::<Vec<_>>(),
            }),
            role => json!({"role": role, "content": t.content}),
        })
        .collect();
    let mut body = json!({"model": model, "messages": messages});
    if let Some(decls) = tools {
        body["tools"] = decls.iter().map(|d| json!({"type": "function", "function": d})).collect();
    }
    body
}

/// Reads the first choice of a chat-completions response.
pub fn parse_completion(v: &Value) -> Result<ChatTurn, ChatError> {
    let bad = |m: &str| ChatError::MalformedModelOutput(m.to_string());
    let msg = v.pointer("/choices/0/message").ok_or_else(|| bad("response has no choices[0].message"))?;
    let content = msg.get("content").and_then(Value::as_str).unwrap_or_default().to_string();
    let mut calls = Vec::new();
    for (i, c) in msg.get("tool_calls").and_then(Value::as_array).into_iter().flatten().enumerate() {
        let name = c.pointer("/function/name").and_then(Value::as_str).ok_or_else(|| bad("tool call without a name"))?;
        let arguments = match c.pointer("/function/arguments") {
            Some(Value::String(s)) if s.trim().is_empty() => Map::new(),
            Some(Value::String(s)) => match serde_json::from_str::<Value>(s) {
                Ok(Value::Object(m)) => m,
                _ => return Err(bad(&format!("arguments of '{name}' are not a JSON object"))),
            },
            Some(Value::Object(m)) => m.clone(),
            None => Map::new(),
            Some(_) => return Err(bad(&format!("arguments of '{name}' are not a JSON object"))),
        };
        let id = c.get("id").and_then(Value::as_str).map(String::from).unwrap_or_else(|| format!("call_{i}"));
        calls.push(CallRequest { id, call: ToolCall { name: name.to_string(), arguments } });
    }
    let turn = ChatTurn { role: Role::Assistant, content, tool_calls: calls, tool_result_for: None };
    if !turn.is_well_formed() {
        return Err(bad("empty assistant message"));
    }
    Ok(turn)
}
