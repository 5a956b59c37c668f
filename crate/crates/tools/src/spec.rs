//! Tool and parameter descriptors.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const CATEGORY_READING: &str = "Data Reading";
pub const CATEGORY_PROCESSING: &str = "Processing and Analyzing Data";
pub const CATEGORY_SAVING: &str = "Saving Data";

pub const CATEGORIES: [&str; 3] = [CATEGORY_READING, CATEGORY_PROCESSING, CATEGORY_SAVING];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamKind {
    Text,
    Integer,
    Real,
    Boolean,
    RealList,
    TextList,
    LayerHandle,
    FilePath,
    Enum(Vec<String>),
}

impl ParamKind {
    /// Name used in the YAML docs.
    pub fn name(&self) -> &'static str {
        match self {
            ParamKind::Text => "text",
            ParamKind::Integer => "integer",
            ParamKind::Real => "real",
            ParamKind::Boolean => "boolean",
            ParamKind::RealList => "real-list",
            ParamKind::TextList => "text-list",
            ParamKind::LayerHandle => "layer-handle",
            ParamKind::FilePath => "file-path",
            ParamKind::Enum(_) => "enum",
        }
    }

    pub fn from_name(name: &str, values: Vec<String>) -> Option<ParamKind> {
        Some(match name {
            "text" => ParamKind::Text,
            "integer" => ParamKind::Integer,
            "real" => ParamKind::Real,
            "boolean" => ParamKind::Boolean,
            "real-list" => ParamKind::RealList,
            "text-list" => ParamKind::TextList,
            "layer-handle" => ParamKind::LayerHandle,
            "file-path" => ParamKind::FilePath,
            "enum" if !values.is_empty() => ParamKind::Enum(values),
            _ => return None,
        })
    }

    /// Whether a JSON value is acceptable for this kind.
    pub fn accepts(&self, v: &Value) -> bool {
        match self {
            ParamKind::Text => v.is_string(),
            ParamKind::LayerHandle | ParamKind::FilePath => v.as_str().is_some_and(|s| !s.trim().is_empty()),
            ParamKind::Integer => v.is_i64() || v.is_u64() || v.as_f64().is_some_and(|f| f.fract() == 0.0 && f.abs() < 9e15),
            ParamKind::Real => v.is_number(),
            ParamKind::Boolean => v.is_boolean(),
            ParamKind::RealList => v.as_array().is_some_and(|a| a.iter().all(Value::is_number)),
            ParamKind::TextList => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
            ParamKind::Enum(values) => v.as_str().is_some_and(|s| values.iter().any(|e| e == s)),
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKind::Enum(v) => write!(f, "enum({})", v.join("|")),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
    pub default: Option<Value>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolSpec {
    pub name: String,
    pub category: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub examples: Vec<String>,
}

impl ToolSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Checks the descriptor invariants; returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        if !CATEGORIES.contains(&self.category.as_str()) {
            return Err(format!("tool {}: unknown category '{}'", self.name, self.category));
        }
        for (i, p) in self.params.iter().enumerate() {
            if p.required && p.default.is_some() {
                return Err(format!("tool {}: required param {} has a default", self.name, p.name));
            }
            if let Some(d) = &p.default {
                if !p.kind.accepts(d) {
                    return Err(format!("tool {}: default of {} does not match {}", self.name, p.name, p.kind));
                }
            }
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(format!("tool {}: duplicate param {}", self.name, p.name));
            }
        }
        Ok(())
    }
}

// On-disk YAML layout.

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct YamlParam {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    pub description: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct YamlTool {
    pub name: String,
    pub category: String,
    pub description: String,
    #[serde(default)]
    pub parameters: Vec<YamlParam>,
    #[serde(default)]
    pub examples: Vec<String>,
}

impl From<&ToolSpec> for YamlTool {
    fn from(t: &ToolSpec) -> Self {
        YamlTool {
            name: t.name.clone(),
            category: t.category.clone(),
            description: t.description.clone(),
            parameters: t
                .params
                .iter()
                .map(|p| YamlParam {
                    name: p.name.clone(),
                    kind: p.kind.name().to_string(),
                    values: match &p.kind {
                        ParamKind::Enum(v) => v.clone(),
                        _ => vec![],
                    },
                    required: p.required,
                    default: p.default.clone(),
                    description: p.description.clone(),
                })
                .collect(),
            examples: t.examples.clone(),
        }
    }
}

impl YamlTool {
    pub fn into_spec(self) -> Result<ToolSpec, String> {
        let name = self.name;
        let params = self
            .parameters
            .into_iter()
            .map(|p| {
                let kind = ParamKind::from_name(&p.kind, p.values)
                    .ok_or_else(|| format!("tool {name}: param {} has unknown type '{}'", p.name, p.kind))?;
                Ok(ParamSpec { name: p.name, kind, required: p.required, default: p.default, description: p.description })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(ToolSpec { name, category: self.category, description: self.description, params, examples: self.examples })
    }
}

/// JSON-schema fragment for one parameter.
pub(crate) fn param_schema(p: &ParamSpec) -> Value {
    let mut m = serde_json::Map::new();
    match &p.kind {
        ParamKind::Text => {
            m.insert("type".into(), "string".into());
        }
        ParamKind::Integer => {
            m.insert("type".into(), "integer".into());
        }
        ParamKind::Real => {
            m.insert("type".into(), "number".into());
        }
        ParamKind::Boolean => {
            m.insert("type".into(), "boolean".into());
        }
        ParamKind::RealList => {
            m.insert("type".into(), "array".into());
            m.insert("items".into(), serde_json::json!({"type": "number"}));
        }
        ParamKind::TextList => {
            m.insert("type".into(), "array".into());
            m.insert("items".into(), serde_json::json!({"type": "string"}));
        }
        ParamKind::LayerHandle => {
            m.insert("type".into(), "string".into());
            m.insert("format".into(), "layer-handle".into());
        }
        ParamKind::FilePath => {
            m.insert("type".into(), "string".into());
            m.insert("format".into(), "file-path".into());
        }
        ParamKind::Enum(values) => {
            m.insert("type".into(), "string".into());
            m.insert("enum".into(), values.clone().into());
        }
    }
    m.insert("description".into(), p.description.clone().into());
    if let Some(d) = &p.default {
        m.insert("default".into(), d.clone());
    }
    Value::Object(m)
}

/// Inverse of [`param_schema`].
pub(crate) fn param_from_schema(name: &str, schema: &Value, required: bool) -> Result<ParamSpec, String> {
    let err = |m: &str| format!("param {name}: {m}");
    let obj = schema.as_object().ok_or_else(|| err("schema is not an object"))?;
    let ty = obj.get("type").and_then(Value::as_str).ok_or_else(|| err("missing type"))?;
    let format = obj.get("format").and_then(Value::as_str);
    let kind = match (ty, format) {
        ("string", Some("layer-handle")) => ParamKind::LayerHandle,
        ("string", Some("file-path")) => ParamKind::FilePath,
        ("string", None) => match obj.get("enum") {
            Some(Value::Array(vals)) => ParamKind::Enum(
                vals.iter().map(|v| v.as_str().map(String::from).ok_or_else(|| err("non-text enum value"))).collect::<Result<_, _>>()?,
            ),
            Some(_) => return Err(err("enum is not a list")),
            None => ParamKind::Text,
        },
        ("integer", None) => ParamKind::Integer,
        ("number", None) => ParamKind::Real,
        ("boolean", None) => ParamKind::Boolean,
        ("array", None) => match obj.get("items").and_then(|i| i.get("type")).and_then(Value::as_str) {
            Some("number") => ParamKind::RealList,
            Some("string") => ParamKind::TextList,
            _ => return Err(err("unsupported array items")),
        },
        _ => return Err(err(&format!("unsupported type {ty}"))),
    };
    if let ParamKind::Enum(v) = &kind {
        if v.is_empty() {
            return Err(err("empty enum"));
        }
    }
    Ok(ParamSpec {
        name: name.to_string(),
        kind,
        required,
        default: obj.get("default").cloned(),
        description: obj.get("description").and_then(Value::as_str).unwrap_or_default().to_string(),
    })
}
