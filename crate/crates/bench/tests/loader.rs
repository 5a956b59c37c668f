use std::path::{Path, PathBuf};

use serde_json::json;
use shapegpt_bench::{load_task, load_task_suite, SuiteError};
use shapegpt_tools::{Registry, Verdict};

fn shipped_task(id: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("suite").join(id)
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let t = to.join(e.file_name());
        if e.path().is_dir() {
            copy_dir(&e.path(), &t);
        } else {
            std::fs::copy(e.path(), t).unwrap();
        }
    }
}

fn scratch_copy(id: &str) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join(id);
    copy_dir(&shipped_task(id), &dir);
    (tmp, dir)
}

fn edit_json(path: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn empty_manifest_is_malformed() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("manifest.json"), r#"{"name":"x","tasks":[]}"#).unwrap();
    let err = load_task_suite(tmp.path(), &Registry::builtin()).unwrap_err();
    assert!(matches!(err, SuiteError::MalformedTask { .. }), "{err}");
}

#[test]
fn missing_manifest_is_malformed() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(load_task_suite(tmp.path(), &Registry::builtin()), Err(SuiteError::MalformedTask { .. })));
}

#[test]
fn unknown_tool_in_trace_is_rejected() {
    let (_tmp, dir) = scratch_copy("t01_roads_buffer");
    edit_json(&dir.join("trace.json"), |v| v[1]["name"] = json!("buffer_v2"));
    match load_task(&dir, &Registry::builtin()).unwrap_err() {
        SuiteError::TraceValidationFailure { index, verdict, .. } => {
            assert_eq!(index, 1);
            assert_eq!(verdict, Verdict::UnknownTool);
        }
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn missing_argument_in_trace_is_rejected() {
    let (_tmp, dir) = scratch_copy("t01_roads_buffer");
    edit_json(&dir.join("trace.json"), |v| {
        v[1]["arguments"].as_object_mut().unwrap().remove("distance");
    });
    match load_task(&dir, &Registry::builtin()).unwrap_err() {
        SuiteError::TraceValidationFailure { verdict, .. } => assert_eq!(verdict, Verdict::MissingParam("distance".into())),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn plan_must_cover_trace() {
    let (_tmp, dir) = scratch_copy("t16_case1_allocation");
    edit_json(&dir.join("task.json"), |v| v["plan"][0]["calls"] = json!(1));
    assert!(matches!(load_task(&dir, &Registry::builtin()), Err(SuiteError::MalformedTask { .. })));
}

#[test]
fn escaping_paths_are_rejected() {
    let (_tmp, dir) = scratch_copy("t01_roads_buffer");
    edit_json(&dir.join("task.json"), |v| v["output_paths"] = json!(["../out.shp"]));
    assert!(matches!(load_task(&dir, &Registry::builtin()), Err(SuiteError::MalformedTask { .. })));
}

#[test]
fn missing_input_is_rejected() {
    let (_tmp, dir) = scratch_copy("t01_roads_buffer");
    std::fs::remove_file(dir.join("input/roads.dbf")).unwrap();
    std::fs::remove_file(dir.join("input/roads.shp")).unwrap();
    assert!(matches!(load_task(&dir, &Registry::builtin()), Err(SuiteError::MalformedTask { .. })));
}

#[test]
fn prompt_file_overrides_task_prompt() {
    let (_tmp, dir) = scratch_copy("t01_roads_buffer");
    std::fs::write(dir.join("prompt.txt"), "Buffer the roads please.\n").unwrap();
    let t = load_task(&dir, &Registry::builtin()).unwrap();
    assert_eq!(t.spec.user_prompt, "Buffer the roads please.");
}

#[test]
fn plan_steps_split_the_trace() {
    let t = load_task(&shipped_task("t16_case1_allocation"), &Registry::builtin()).unwrap();
    let steps = t.plan_steps();
    assert_eq!(steps.len(), 3);
    assert_eq!(steps.iter().map(|s| s.calls.len()).collect::<Vec<_>>(), vec![2, 1, 2]);
    let flat: Vec<_> = steps.into_iter().flat_map(|s| s.calls).collect();
    assert_eq!(flat, t.trace.calls);
}
