use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::roster::builtin_specs;
use crate::spec::{param_from_schema, param_schema, ToolSpec, YamlTool, CATEGORIES};

pub const TOOL_COUNT: usize = 27;

pub const YAML_DOC_NAME: &str = "tools.yaml";
pub const JSON_DOC_NAME: &str = "tools.json";

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read {}: {msg}", path.display())]
    Io { path: PathBuf, msg: String },
    #[error("schema directory needs exactly one YAML and one JSON doc (found {yaml} YAML, {json} JSON)")]
    MissingDocs { yaml: usize, json: usize },
    #[error("cannot parse {format} doc: {msg}")]
    Parse { format: &'static str, msg: String },
    #[error("YAML and JSON docs disagree: {0}")]
    SchemaMismatch(String),
    #[error("duplicate tool '{0}'")]
    DuplicateTool(String),
    #[error("registry has {0} tools, expected {TOOL_COUNT}")]
    WrongToolCount(usize),
    #[error("invalid tool spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocFormat {
    /// Concise layout injected into model context.
    Yaml,
    /// JSON-schema layout for external systems.
    Json,
    /// Tool declarations for chat-completions endpoints.
    Wire,
}

/// Immutable set of tool descriptors, sorted by category then name.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    tools: Vec<ToolSpec>,
}

fn category_rank(c: &str) -> usize {
    CATEGORIES.iter().position(|x| *x == c).unwrap_or(CATEGORIES.len())
}

impl Registry {
    /// The compiled-in tool set.
    pub fn builtin() -> Registry {
        Registry::from_specs(builtin_specs()).expect("built-in roster is valid")
    }

    pub fn from_specs(mut tools: Vec<ToolSpec>) -> Result<Registry, RegistryError> {
        let mut seen = BTreeSet::new();
        for t in &tools {
            t.check().map_err(RegistryError::InvalidSpec)?;
            if !seen.insert(t.name.clone()) {
                return Err(RegistryError::DuplicateTool(t.name.clone()));
            }
        }
        if tools.len() != TOOL_COUNT {
            return Err(RegistryError::WrongToolCount(tools.len()));
        }
        tools.sort_by(|a, b| (category_rank(&a.category), &a.name).cmp(&(category_rank(&b.category), &b.name)));
        Ok(Registry { tools })
    }

    /// Parses both docs and requires them to describe the same tools.
    pub fn from_docs(yaml: &str, json: &str) -> Result<Registry, RegistryError> {
        let a = parse_yaml_doc(yaml)?;
        let b = parse_json_doc(json)?;
        for list in [&a, &b] {
            let mut seen = BTreeSet::new();
            for t in list.iter() {
                if !seen.insert(t.name.as_str()) {
                    return Err(RegistryError::DuplicateTool(t.name.clone()));
                }
            }
        }
        let ma: BTreeMap<&str, &ToolSpec> = a.iter().map(|t| (t.name.as_str(), t)).collect();
        let mb: BTreeMap<&str, &ToolSpec> = b.iter().map(|t| (t.name.as_str(), t)).collect();
        for name in ma.keys().chain(mb.keys()) {
            match (ma.get(name), mb.get(name)) {
                (Some(x), Some(y)) if x == y => {}
                (Some(_), Some(_)) => return Err(RegistryError::SchemaMismatch(format!("tool '{name}' differs"))),
                (Some(_), None) => return Err(RegistryError::SchemaMismatch(format!("tool '{name}' missing from JSON"))),
                (None, _) => return Err(RegistryError::SchemaMismatch(format!("tool '{name}' missing from YAML"))),
            }
        }
        Registry::from_specs(a)
    }

    pub fn tools(&self) -> &[ToolSpec] {
        &self.tools
    }

    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.name == name)
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    /// (category, tool count) in canonical category order.
    pub fn category_counts(&self) -> Vec<(&'static str, usize)> {
        CATEGORIES.iter().map(|c| (*c, self.tools.iter().filter(|t| t.category == *c).count())).collect()
    }
}

/// Loads the YAML and JSON docs from `dir` and cross-checks them.
pub fn load_registry(dir: impl AsRef<Path>) -> Result<Registry, RegistryError> {
    let dir = dir.as_ref();
    let io = |path: &Path, e: std::io::Error| RegistryError::Io { path: path.to_path_buf(), msg: e.to_string() };
    let mut yaml = Vec::new();
    let mut json = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let path = entry.map_err(|e| io(dir, e))?.path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("yaml" | "yml") => yaml.push(path),
            Some("json") => json.push(path),
            _ => {}
        }
    }
    if yaml.len() != 1 || json.len() != 1 {
        return Err(RegistryError::MissingDocs { yaml: yaml.len(), json: json.len() });
    }
    let y = std::fs::read_to_string(&yaml[0]).map_err(|e| io(&yaml[0], e))?;
    let j = std::fs::read_to_string(&json[0]).map_err(|e| io(&json[0], e))?;
    Registry::from_docs(&y, &j)
}

pub fn parse_yaml_doc(text: &str) -> Result<Vec<ToolSpec>, RegistryError> {
    let parse = |msg: String| RegistryError::Parse { format: "YAML", msg };
    let raw: Vec<YamlTool> = serde_yaml::from_str(text).map_err(|e| parse(e.to_string()))?;
    raw.into_iter().map(|t| t.into_spec().map_err(parse)).collect()
}

pub fn parse_json_doc(text: &str) -> Result<Vec<ToolSpec>, RegistryError> {
    let parse = |msg: String| RegistryError::Parse { format: "JSON", msg };
    let raw: Vec<Value> = serde_json::from_str(text).map_err(|e| parse(e.to_string()))?;
    raw.iter()
        .map(|t| {
            let field = |k: &str| t.get(k).and_then(Value::as_str).map(String::from).ok_or_else(|| parse(format!("tool without '{k}'")));
            let name = field("name")?;
            let params = t.get("parameters").ok_or_else(|| parse(format!("{name}: no parameters")))?;
            let required: Vec<&str> = params
                .get("required")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_str).collect())
                .unwrap_or_default();
            let props = params
                .get("properties")
                .and_then(Value::as_object)
                .ok_or_else(|| parse(format!("{name}: no properties")))?;
            if let Some(r) = required.iter().find(|r| !props.contains_key(**r)) {
                return Err(parse(format!("{name}: required '{r}' is not a property")));
            }
            Ok(ToolSpec {
                params: props
                    .iter()
                    .map(|(k, v)| param_from_schema(k, v, required.contains(&k.as_str())))
                    .collect::<Result<_, _>>()
                    .map_err(|m| parse(format!("{name}: {m}")))?,
                category: field("category")?,
                description: field("description")?,
                examples: t
                    .get("examples")
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_str).map(String::from).collect())
                    .unwrap_or_default(),
                name,
            })
        })
        .collect()
}

fn parameters_schema(t: &ToolSpec) -> Value {
    let props: serde_json::Map<String, Value> = t.params.iter().map(|p| (p.name.clone(), param_schema(p))).collect();
    let required: Vec<&str> = t.params.iter().filter(|p| p.required).map(|p| p.name.as_str()).collect();
    json!({"type": "object", "properties": props, "required": required})
}

/// One declaration per tool in the chat-completions shape.
pub fn wire_declarations(reg: &Registry) -> Vec<Value> {
    reg.tools
        .iter()
        .map(|t| json!({"name": t.name, "description": t.description, "parameters": parameters_schema(t)}))
        .collect()
}

/// Deterministic text rendering of the registry.
pub fn export_schemas(reg: &Registry, format: DocFormat) -> String {
    match format {
        DocFormat::Yaml => {
            let docs: Vec<YamlTool> = reg.tools.iter().map(YamlTool::from).collect();
            serde_yaml::to_string(&docs).expect("plain data serializes")
        }
        DocFormat::Json => {
            let docs: Vec<Value> = reg
                .tools
                .iter()
                .map(|t| {
                    json!({
                        "name": t.name,
                        "category": t.category,
                        "description": t.description,
                        "parameters": parameters_schema(t),
                        "examples": t.examples,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&docs).expect("plain data serializes") + "\n"
        }
        DocFormat::Wire => serde_json::to_string_pretty(&wire_declarations(reg)).expect("plain data serializes") + "\n",
    }
}

/// Writes `tools.yaml` and `tools.json` into `dir`.
pub fn write_schema_dir(reg: &Registry, dir: impl AsRef<Path>) -> std::io::Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(YAML_DOC_NAME), export_schemas(reg, DocFormat::Yaml))?;
    std::fs::write(dir.join(JSON_DOC_NAME), export_schemas(reg, DocFormat::Json))
}
