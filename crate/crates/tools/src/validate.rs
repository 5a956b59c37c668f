use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::registry::Registry;

/// A tool invocation as emitted by a model or a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    #[serde(default)]
    pub arguments: Map<String, Value>,
}

impl ToolCall {
    pub fn new(name: impl Into<String>, arguments: Value) -> ToolCall {
        let arguments = match arguments {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            other => panic!("tool arguments must be an object, got {other}"),
        };
        ToolCall { name: name.into(), arguments }
    }
}

impl fmt::Display for ToolCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, (k, v)) in self.arguments.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "param", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    UnknownTool,
    MissingParam(String),
    TypeMismatch(String),
    UnknownParam(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("valid"),
            Verdict::UnknownTool => f.write_str("unknown_tool"),
            Verdict::MissingParam(p) => write!(f, "missing_param({p})"),
            Verdict::TypeMismatch(p) => write!(f, "type_mismatch({p})"),
            Verdict::UnknownParam(p) => write!(f, "unknown_param({p})"),
        }
    }
}

/// Checks a call against its descriptor. The first problem found wins, in
/// this order: unknown tool, undeclared argument (argument order), missing
/// required parameter, then mismatched type (both in declaration order).
/// A `null` argument counts as absent.
pub fn validate_call(call: &ToolCall, reg: &Registry) -> Verdict {
    let Some(spec) = reg.get(&call.name) else { return Verdict::UnknownTool };
    if let Some(k) = call.arguments.keys().find(|k| spec.param(k).is_none()) {
        return Verdict::UnknownParam(k.clone());
    }
    let present = |name: &str| call.arguments.get(name).filter(|v| !v.is_null());
    if let Some(p) = spec.params.iter().find(|p| p.required && present(&p.name).is_none()) {
        return Verdict::MissingParam(p.name.clone());
    }
    for p in &spec.params {
        if let Some(v) = present(&p.name) {
            if !p.kind.accepts(v) {
                return Verdict::TypeMismatch(p.name.clone());
            }
        }
    }
    Verdict::Valid
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn verdicts() {
        let r = Registry::builtin();
        let v = |name: &str, args: Value| validate_call(&ToolCall::new(name, args), &r);
        assert_eq!(v("buffer", json!({"layer": "roads"})), Verdict::MissingParam("distance".into()));
        assert_eq!(v("buffer", json!({"layer": "roads", "distance": "five"})), Verdict::TypeMismatch("distance".into()));
        assert_eq!(v("buffer", json!({"layer": "roads", "distance": 500, "output": "b"})), Verdict::Valid);
        assert_eq!(v("buffer", json!({"layer": "roads", "distance": 5, "radius": 1})), Verdict::UnknownParam("radius".into()));
        assert_eq!(v("bufer", json!({})), Verdict::UnknownTool);
        assert_eq!(v("buffer", json!({"layer": "roads", "distance": 5, "output": null})), Verdict::Valid);
        assert_eq!(v("describe_shapefile", json!({"layer": "a", "sample_rows": 2.0})), Verdict::Valid);
        assert_eq!(v("describe_shapefile", json!({"layer": "a", "sample_rows": 2.5})), Verdict::TypeMismatch("sample_rows".into()));
        assert_eq!(v("spatial_join", json!({"layer": "a", "join": "b", "predicate": "touches"})), Verdict::TypeMismatch("predicate".into()));
        assert_eq!(v("multi_ring_buffer", json!({"layer": "a", "distances": [1, "2"]})), Verdict::TypeMismatch("distances".into()));
        assert_eq!(v("clip", json!({"layer": "", "boundary": "b"})), Verdict::TypeMismatch("layer".into()));
    }

    #[test]
    fn verdict_wire_form() {
        let s = serde_json::to_string(&Verdict::MissingParam("distance".into())).unwrap();
        assert_eq!(s, r#"{"verdict":"missing_param","param":"distance"}"#);
        assert_eq!(serde_json::to_string(&Verdict::Valid).unwrap(), r#"{"verdict":"valid"}"#);
    }
}
