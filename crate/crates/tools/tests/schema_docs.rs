use std::path::PathBuf;

use serde_json::Value;
use shapegpt_tools::{
    export_schemas, load_registry, wire_declarations, write_schema_dir, DocFormat, Registry, RegistryError,
    JSON_DOC_NAME, YAML_DOC_NAME,
};

fn shipped_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

#[test]
fn shipped_docs_match_builtin() {
    let reg = Registry::builtin();
    if std::env::var_os("SHAPEGPT_BLESS").is_some() {
        write_schema_dir(&reg, shipped_dir()).unwrap();
    }
    let loaded = load_registry(shipped_dir()).unwrap();
    assert_eq!(loaded, reg);
    let yaml = std::fs::read_to_string(shipped_dir().join(YAML_DOC_NAME)).unwrap();
    let json = std::fs::read_to_string(shipped_dir().join(JSON_DOC_NAME)).unwrap();
    assert_eq!(yaml, export_schemas(&reg, DocFormat::Yaml), "rerun with SHAPEGPT_BLESS=1");
    assert_eq!(json, export_schemas(&reg, DocFormat::Json), "rerun with SHAPEGPT_BLESS=1");
}

#[test]
fn category_counts_of_shipped_registry() {
    let reg = load_registry(shipped_dir()).unwrap();
    assert_eq!(reg.len(), 27);
    let counts = reg.category_counts();
    assert_eq!(counts.iter().map(|c| c.1).collect::<Vec<_>>(), [2, 22, 3]);
}

#[test]
fn export_then_load_is_identity() {
    let reg = Registry::builtin();
    let dir = tempfile::tempdir().unwrap();
    write_schema_dir(&reg, dir.path()).unwrap();
    let back = load_registry(dir.path()).unwrap();
    assert_eq!(back, reg);
    // and again from the re-exported text
    assert_eq!(export_schemas(&back, DocFormat::Yaml), export_schemas(&reg, DocFormat::Yaml));
    assert_eq!(export_schemas(&back, DocFormat::Json), export_schemas(&reg, DocFormat::Json));
}

#[test]
fn yaml_export_is_stable() {
    let a = export_schemas(&Registry::builtin(), DocFormat::Yaml);
    let b = export_schemas(&Registry::builtin(), DocFormat::Yaml);
    assert_eq!(a, b);
}

#[test]
fn json_export_names_every_tool() {
    let reg = Registry::builtin();
    let doc: Vec<Value> = serde_json::from_str(&export_schemas(&reg, DocFormat::Json)).unwrap();
    let names: Vec<&str> = doc.iter().map(|t| t["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 27);
    for t in reg.tools() {
        assert!(names.contains(&t.name.as_str()));
    }
}

#[test]
fn wire_declarations_have_object_schemas() {
    let decls = wire_declarations(&Registry::builtin());
    assert_eq!(decls.len(), 27);
    for d in &decls {
        let keys: Vec<&String> = d.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["name", "description", "parameters"]);
        assert_eq!(d["parameters"]["type"], "object");
        for r in d["parameters"]["required"].as_array().unwrap() {
            assert!(d["parameters"]["properties"].get(r.as_str().unwrap()).is_some());
        }
    }
    let buffer = decls.iter().find(|d| d["name"] == "buffer").unwrap();
    assert_eq!(buffer["parameters"]["properties"]["distance"]["type"], "number");
    assert_eq!(buffer["parameters"]["required"], serde_json::json!(["layer", "distance"]));
}

#[test]
fn yaml_tool_missing_from_json_is_a_mismatch() {
    let reg = Registry::builtin();
    let yaml = export_schemas(&reg, DocFormat::Yaml);
    let mut json: Vec<Value> = serde_json::from_str(&export_schemas(&reg, DocFormat::Json)).unwrap();
    json.retain(|t| t["name"] != "clip");
    let err = Registry::from_docs(&yaml, &serde_json::to_string(&json).unwrap()).unwrap_err();
    assert!(matches!(err, RegistryError::SchemaMismatch(ref m) if m.contains("clip")), "{err}");
}

#[test]
fn differing_param_is_a_mismatch() {
    let reg = Registry::builtin();
    let yaml = export_schemas(&reg, DocFormat::Yaml);
    let json = export_schemas(&reg, DocFormat::Json).replacen("\"number\"", "\"integer\"", 1);
    assert!(matches!(Registry::from_docs(&yaml, &json), Err(RegistryError::SchemaMismatch(_))));
}

#[test]
fn duplicate_tool_in_doc() {
    let reg = Registry::builtin();
    let mut json: Vec<Value> = serde_json::from_str(&export_schemas(&reg, DocFormat::Json)).unwrap();
    json.push(json[0].clone());
    let yaml = export_schemas(&reg, DocFormat::Yaml);
    assert!(matches!(
        Registry::from_docs(&yaml, &serde_json::to_string(&json).unwrap()),
        Err(RegistryError::DuplicateTool(_))
    ));
}

#[test]
fn empty_dir_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_registry(dir.path()), Err(RegistryError::MissingDocs { yaml: 0, json: 0 })));
}

#[test]
fn wrong_count_from_docs() {
    let reg = Registry::builtin();
    let mut yaml: Vec<serde_yaml::Value> = serde_yaml::from_str(&export_schemas(&reg, DocFormat::Yaml)).unwrap();
    let mut json: Vec<Value> = serde_json::from_str(&export_schemas(&reg, DocFormat::Json)).unwrap();
    yaml.pop();
    json.pop();
    let err = Registry::from_docs(&serde_yaml::to_string(&yaml).unwrap(), &serde_json::to_string(&json).unwrap());
    assert!(matches!(err, Err(RegistryError::WrongToolCount(26))));
}
