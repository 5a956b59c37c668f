use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use shapegpt_core::shapefile::describe_dataset;
use shapegpt_core::{Dataset, DatasetError, GeometryConfig, GeometryError, ShapefileError};

use crate::ops;
use crate::registry::Registry;
use crate::spec::ToolSpec;
use crate::validate::{validate_call, ToolCall, Verdict};
use crate::workspace::Workspace;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("unknown layer '{0}'")]
    UnknownLayer(String),
    #[error("layer '{layer}' has no field '{field}'")]
    UnknownField { layer: String, field: String },
    #[error("layer '{layer}' holds {found} features, expected {expected}")]
    WrongLayerKind { layer: String, expected: &'static str, found: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("path '{0}' is outside the sandbox")]
    Sandbox(String),
    #[error("call rejected: {0}")]
    Validation(Verdict),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Shapefile(#[from] ShapefileError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    UnknownLayer,
    UnknownField,
    WrongLayerKind,
    InvalidArgument,
    SandboxViolation,
    Validation,
    Geometry,
    Shapefile,
    Dataset,
    Io,
    Output,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("error"))
    }
}

impl ExecError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            ExecError::UnknownLayer(_) => ErrorKind::UnknownLayer,
            ExecError::UnknownField { .. } => ErrorKind::UnknownField,
            ExecError::WrongLayerKind { .. } => ErrorKind::WrongLayerKind,
            ExecError::InvalidArgument(_) => ErrorKind::InvalidArgument,
            ExecError::Sandbox(_) => ErrorKind::SandboxViolation,
            ExecError::Validation(_) => ErrorKind::Validation,
            ExecError::Geometry(_) => ErrorKind::Geometry,
            ExecError::Shapefile(_) => ErrorKind::Shapefile,
            ExecError::Dataset(_) => ErrorKind::Dataset,
            ExecError::Io(_) => ErrorKind::Io,
            ExecError::Output(_) => ErrorKind::Output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_handle: Option<String>,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<ErrorKind>,
}

impl ToolResult {
    pub fn ok(output_handle: Option<String>, message: impl Into<String>) -> ToolResult {
        ToolResult { status: Status::Ok, output_handle, message: message.into(), error_kind: None }
    }

    pub fn error(e: &ExecError) -> ToolResult {
        ToolResult {
            status: Status::Error,
            output_handle: None,
            message: format!("error ({}): {e}", e.kind()),
            error_kind: Some(e.kind()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

/// Typed access to call arguments with declared defaults applied.
pub(crate) struct Args<'a> {
    spec: &'a ToolSpec,
    map: &'a Map<String, Value>,
}

impl<'a> Args<'a> {
    pub fn new(spec: &'a ToolSpec, map: &'a Map<String, Value>) -> Self {
        Args { spec, map }
    }

    fn value(&self, name: &str) -> Option<&'a Value> {
        self.map
            .get(name)
            .filter(|v| !v.is_null())
            .or_else(|| self.spec.param(name).and_then(|p| p.default.as_ref()))
    }

    fn missing(name: &str) -> ExecError {
        ExecError::InvalidArgument(format!("missing '{name}'"))
    }

    pub fn text(&self, name: &str) -> Option<&'a str> {
        self.value(name).and_then(Value::as_str)
    }

    pub fn req_text(&self, name: &str) -> Result<&'a str, ExecError> {
        self.text(name).ok_or_else(|| Self::missing(name))
    }

    pub fn real(&self, name: &str) -> Result<f64, ExecError> {
        self.value(name).and_then(Value::as_f64).ok_or_else(|| Self::missing(name))
    }

    pub fn integer(&self, name: &str) -> Option<i64> {
        self.value(name).and_then(|v| v.as_i64().or_else(|| v.as_f64().map(|f| f as i64)))
    }

    pub fn boolean(&self, name: &str) -> bool {
        self.value(name).and_then(Value::as_bool).unwrap_or(false)
    }

    pub fn real_list(&self, name: &str) -> Result<Vec<f64>, ExecError> {
        let a = self.value(name).and_then(Value::as_array).ok_or_else(|| Self::missing(name))?;
        Ok(a.iter().filter_map(Value::as_f64).collect())
    }

    pub fn text_list(&self, name: &str) -> Result<Vec<&'a str>, ExecError> {
        let a = self.value(name).and_then(Value::as_array).ok_or_else(|| Self::missing(name))?;
        Ok(a.iter().filter_map(Value::as_str).collect())
    }
}

/// Validates and executes one call. Failures come back as an error result.
pub fn invoke(call: &ToolCall, ws: &mut Workspace, reg: &Registry, cfg: &GeometryConfig) -> ToolResult {
    let verdict = validate_call(call, reg);
    if !verdict.is_valid() {
        return ToolResult::error(&ExecError::Validation(verdict));
    }
    let spec = reg.get(&call.name).expect("validated");
    let args = Args::new(spec, &call.arguments);
    match ops::dispatch(&call.name, &args, ws, cfg) {
        Ok(r) => r,
        Err(e) => ToolResult::error(&e),
    }
}

/// Stores `d` under the requested or a generated handle.
pub(crate) fn store_layer(ws: &mut Workspace, handle: Option<&str>, tool: &str, d: Dataset, note: &str) -> ToolResult {
    let handle = match handle.map(str::trim).filter(|h| !h.is_empty()) {
        Some(h) => h.to_string(),
        None => ws.auto_handle(tool),
    };
    let line = describe_dataset(&d, 0).one_line();
    ws.insert_layer(handle.clone(), d);
    let msg = if note.is_empty() { format!("layer '{handle}': {line}") } else { format!("{note}; layer '{handle}': {line}") };
    ToolResult::ok(Some(handle), msg)
}
