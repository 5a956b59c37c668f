//! The callable tool set: descriptors, validation, and execution against a
//! sandboxed workspace of named layers.

mod invoke;
mod ops;
mod registry;
mod roster;
mod spec;
mod validate;
mod workspace;

pub use invoke::{invoke, ErrorKind, ExecError, Status, ToolResult};
pub use ops::{render_layers, CANVAS_SIZE};
pub use registry::{
    export_schemas, load_registry, parse_json_doc, parse_yaml_doc, wire_declarations, write_schema_dir, DocFormat,
    Registry, RegistryError, JSON_DOC_NAME, TOOL_COUNT, YAML_DOC_NAME,
};
pub use roster::builtin_specs;
pub use spec::{ParamKind, ParamSpec, ToolSpec, CATEGORIES, CATEGORY_PROCESSING, CATEGORY_READING, CATEGORY_SAVING};
pub use validate::{validate_call, ToolCall, Verdict};
pub use workspace::Workspace;
