use std::io::{BufRead, BufReader, Cursor, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::Value;

use shapegpt_agent::{ChatClient, ChatError, ChatTurn};
use shapegpt_bench::{grade_output, load_task, Grade, LoadedTask};
use shapegpt_service::{AppState, ClientFactory, ScriptedFactory, ServiceConfig};
use shapegpt_tools::Registry;

fn task_dir(id: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../bench/suite").join(id)
}

fn case1() -> LoadedTask {
    load_task(&task_dir("t16_case1_allocation"), &Registry::builtin()).unwrap()
}

/// Zip of the files under `dir`, stored flat.
fn zip_dir(dir: &Path) -> Vec<u8> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        w.start_file(p.file_name().unwrap().to_string_lossy(), zip::write::SimpleFileOptions::default()).unwrap();
        w.write_all(&std::fs::read(&p).unwrap()).unwrap();
    }
    w.finish().unwrap().into_inner()
}

struct Server {
    addr: SocketAddr,
    state: Arc<AppState>,
    _rt: tokio::runtime::Runtime,
}

fn serve(factory: Arc<dyn ClientFactory>, max_upload: Option<usize>) -> Server {
    let mut cfg = ServiceConfig::default();
    if let Some(m) = max_upload {
        cfg.max_upload = m;
    }
    let state = Arc::new(AppState::new(cfg, Registry::builtin(), factory).unwrap());
    let rt = tokio::runtime::Runtime::new().unwrap();
    let (addr, fut) = rt.block_on(shapegpt_service::bind("127.0.0.1:0".parse().unwrap(), state.clone())).unwrap();
    rt.spawn(fut);
    Server { addr, state, _rt: rt }
}

fn scripted(task: &LoadedTask) -> Arc<dyn ClientFactory> {
    Arc::new(ScriptedFactory { steps: task.plan_steps(), max_attempts: 3 })
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).timeout_global(Some(Duration::from_secs(30))).build().into()
}

impl Server {
    fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    fn upload(&self, bytes: &[u8]) -> (u16, Value) {
        let boundary = "----shapegpt-test-boundary";
        let mut body = Vec::new();
        body.extend_from_slice(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"data.zip\"\r\nContent-Type: application/zip\r\n\r\n").as_bytes());
        body.extend_from_slice(bytes);
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
        let mut r = agent()
            .post(&self.url("/sessions"))
            .header("Content-Type", &format!("multipart/form-data; boundary={boundary}"))
            .send(&body[..])
            .unwrap();
        (r.status().as_u16(), serde_json::from_str(&r.body_mut().read_to_string().unwrap()).unwrap())
    }

    fn submit(&self, id: &str, prompt: &str) -> (u16, Value) {
        let mut r = agent().post(&self.url(&format!("/sessions/{id}/task"))).send_json(serde_json::json!({"prompt": prompt})).unwrap();
        (r.status().as_u16(), serde_json::from_str(&r.body_mut().read_to_string().unwrap()).unwrap())
    }

    fn get(&self, path: &str) -> (u16, Vec<u8>) {
        let mut r = agent().get(&self.url(path)).call().unwrap();
        let status = r.status().as_u16();
        (status, r.body_mut().with_config().limit(1 << 30).read_to_vec().unwrap())
    }

    fn get_json(&self, path: &str) -> (u16, Value) {
        let (s, b) = self.get(path);
        (s, serde_json::from_slice(&b).unwrap())
    }

    /// Reads an SSE stream as (id, data) pairs, stopping after `limit`
    /// events or at end of stream.
    fn events(&self, path: &str, last_event_id: Option<u64>, limit: usize) -> Vec<(u64, String)> {
        let mut req = agent().get(&self.url(path));
        if let Some(n) = last_event_id {
            req = req.header("Last-Event-ID", &n.to_string());
        }
        let r = req.call().unwrap();
        assert_eq!(r.status().as_u16(), 200);
        let reader = BufReader::new(r.into_body().into_reader());
        let mut out = Vec::new();
        let (mut id, mut data) = (None, None);
        for line in reader.lines() {
            let line = line.unwrap();
            if let Some(v) = line.strip_prefix("id:") {
                id = Some(v.trim().parse().unwrap());
            } else if let Some(v) = line.strip_prefix("data:") {
                data = Some(v.strip_prefix(' ').unwrap_or(v).to_string());
            } else if line.is_empty() {
                if let (Some(i), Some(d)) = (id.take(), data.take()) {
                    out.push((i, d));
                    if out.len() >= limit {
                        break;
                    }
                }
            }
        }
        out
    }

    fn wait_done(&self, id: &str) -> Value {
        let t0 = Instant::now();
        loop {
            let (_, v) = self.get_json(&format!("/sessions/{id}"));
            if v["status"] == "finished" || v["status"] == "failed" {
                return v;
            }
            assert!(t0.elapsed() < Duration::from_secs(30), "session did not finish");
            std::thread::sleep(Duration::from_millis(20));
        }
    }
}

fn unzip_to(bytes: &[u8], dir: &Path) -> Vec<String> {
    let mut z = zip::ZipArchive::new(Cursor::new(bytes)).unwrap();
    let mut names = Vec::new();
    for i in 0..z.len() {
        let mut f = z.by_index(i).unwrap();
        let mut buf = Vec::new();
        f.read_to_end(&mut buf).unwrap();
        std::fs::write(dir.join(f.name()), buf).unwrap();
        names.push(f.name().to_string());
    }
    names.sort();
    names
}

#[test]
fn case1_create_submit_stream_fetch() {
    let task = case1();
    let srv = serve(scripted(&task), None);
    let (code, created) = srv.upload(&zip_dir(&task.dir.join("input")));
    assert_eq!(code, 201, "{created}");
    assert_eq!(created["status"], "idle");
    assert_eq!(created["layers"].as_array().unwrap().len(), 1);
    assert_eq!(created["layers"][0]["path"], "input/sites.shp");
    assert_eq!(created["layers"][0]["summary"]["feature_count"], 12);
    let id = created["id"].as_str().unwrap().to_string();

    let (code, _) = srv.submit(&id, &task.spec.user_prompt);
    assert_eq!(code, 202);
    let streamed = srv.events(&format!("/sessions/{id}/events"), None, usize::MAX);
    let done = srv.wait_done(&id);
    assert_eq!(done["status"], "finished");
    assert_eq!(done["outcome"]["subtasks"], 3);

    let log = srv.state.session(&id).unwrap().log.to_jsonl();
    let joined: String = streamed.iter().map(|(_, d)| format!("{d}\n")).collect();
    assert_eq!(joined, log);
    assert!(streamed.iter().enumerate().all(|(i, (seq, _))| *seq == i as u64 + 1));
    let emitted = streamed.iter().filter(|(_, d)| d.contains(r#""type":"subtask_emitted""#)).count();
    assert_eq!(emitted, 3);

    let (code, list) = srv.get_json(&format!("/sessions/{id}/artifacts"));
    assert_eq!(code, 200);
    assert_eq!(list["artifacts"][0]["name"], "output/allocation.shp");
    let (code, bytes) = srv.get(&format!("/sessions/{id}/artifacts/output/allocation.shp"));
    assert_eq!(code, 200);
    let tmp = tempfile::tempdir().unwrap();
    let names = unzip_to(&bytes, tmp.path());
    assert_eq!(names, ["allocation.dbf", "allocation.shp", "allocation.shx"]);
    let g = grade_output(&task.expected_path("output/allocation.shp"), &tmp.path().join("allocation.shp")).unwrap();
    assert_eq!(g, Grade::Pass);
}

#[test]
fn finished_stream_replays_and_resumes() {
    let task = case1();
    let srv = serve(scripted(&task), None);
    let id = srv.upload(&zip_dir(&task.dir.join("input"))).1["id"].as_str().unwrap().to_string();
    srv.submit(&id, &task.spec.user_prompt);
    srv.wait_done(&id);
    let all = srv.events(&format!("/sessions/{id}/events"), None, usize::MAX);
    let n = all.len() as u64;
    assert!(n > 5);
    let by_query = srv.events(&format!("/sessions/{id}/events?after=3"), None, usize::MAX);
    assert_eq!(by_query.first().unwrap().0, 4);
    assert_eq!(by_query, all[3..]);
    let by_header = srv.events(&format!("/sessions/{id}/events"), Some(n - 1), usize::MAX);
    assert_eq!(by_header, all[(n - 1) as usize..]);
    assert!(srv.events(&format!("/sessions/{id}/events?after={n}"), None, usize::MAX).is_empty());
}

/// Scripted clients that pause before every reply.
struct Slow(Arc<dyn ClientFactory>);

struct SlowClient(Box<dyn ChatClient>);

impl ChatClient for SlowClient {
    fn chat(&mut self, turns: &[ChatTurn], tools: Option<&[Value]>) -> Result<ChatTurn, ChatError> {
        std::thread::sleep(Duration::from_millis(40));
        self.0.chat(turns, tools)
    }
}

impl ClientFactory for Slow {
    fn clients(&self, prompt: &str, inputs: &[String]) -> (Box<dyn ChatClient>, Box<dyn ChatClient>) {
        let (p, w) = self.0.clients(prompt, inputs);
        (Box::new(SlowClient(p)), Box::new(SlowClient(w)))
    }
}

#[test]
fn reconnect_mid_run_loses_nothing() {
    let task = case1();
    let srv = serve(Arc::new(Slow(scripted(&task))), None);
    let id = srv.upload(&zip_dir(&task.dir.join("input"))).1["id"].as_str().unwrap().to_string();
    let (code, _) = srv.submit(&id, &task.spec.user_prompt);
    assert_eq!(code, 202);
    let (_, v) = srv.get_json(&format!("/sessions/{id}"));
    assert_eq!(v["status"], "running");
    let (code, busy) = srv.submit(&id, "again");
    assert_eq!(code, 409);
    assert_eq!(busy["error"], "SessionBusy");

    let first = srv.events(&format!("/sessions/{id}/events"), None, 3);
    assert_eq!(first.len(), 3);
    let rest = srv.events(&format!("/sessions/{id}/events"), Some(first.last().unwrap().0), usize::MAX);
    assert_eq!(rest.first().unwrap().0, 4);
    let joined: String = first.iter().chain(&rest).map(|(_, d)| format!("{d}\n")).collect();
    assert_eq!(srv.wait_done(&id)["status"], "finished");
    assert_eq!(joined, srv.state.session(&id).unwrap().log.to_jsonl());
}

#[test]
fn upload_errors() {
    let task = case1();
    let srv = serve(scripted(&task), Some(64 * 1024));
    let (code, v) = srv.upload(b"definitely not a zip");
    assert_eq!((code, v["error"].as_str().unwrap()), (400, "BadArchive"));

    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    w.start_file("sites.dbf", zip::write::SimpleFileOptions::default()).unwrap();
    w.write_all(&std::fs::read(task.dir.join("input/sites.dbf")).unwrap()).unwrap();
    let (code, v) = srv.upload(&w.finish().unwrap().into_inner());
    assert_eq!((code, v["error"].as_str().unwrap()), (400, "NoShapefileFound"));

    let big = vec![7u8; 100 * 1024];
    let (code, v) = srv.upload(&big);
    assert_eq!((code, v["error"].as_str().unwrap()), (413, "OversizeUpload"));
}

#[test]
fn unknown_sessions_and_artifacts() {
    let task = case1();
    let srv = serve(scripted(&task), None);
    for path in ["/sessions/nope", "/sessions/nope/events", "/sessions/nope/artifacts", "/sessions/nope/artifacts/x.shp"] {
        let (code, v) = srv.get_json(path);
        assert_eq!((code, v["error"].as_str().unwrap()), (404, "UnknownSession"), "{path}");
    }
    let (code, v) = srv.submit("nope", "hello");
    assert_eq!((code, v["error"].as_str().unwrap()), (404, "UnknownSession"));

    let id = srv.upload(&zip_dir(&task.dir.join("input"))).1["id"].as_str().unwrap().to_string();
    srv.submit(&id, &task.spec.user_prompt);
    srv.wait_done(&id);
    let (code, v) = srv.get_json(&format!("/sessions/{id}/artifacts/output/%2E%2E/%2E%2E/etc/passwd"));
    assert_eq!((code, v["error"].as_str().unwrap()), (400, "PathTraversal"));
    let (code, v) = srv.get_json(&format!("/sessions/{id}/artifacts/input/sites.shp"));
    assert_eq!((code, v["error"].as_str().unwrap()), (404, "UnknownArtifact"));
    let (code, v) = srv.submit(&id, "once more");
    assert_eq!((code, v["error"].as_str().unwrap()), (409, "SessionBusy"));
}

#[test]
fn tools_endpoint_lists_registry() {
    let srv = serve(scripted(&case1()), None);
    let (code, v) = srv.get_json("/tools");
    assert_eq!(code, 200);
    let tools = v.as_array().unwrap();
    assert_eq!(tools.len(), 27);
    assert!(tools.iter().all(|t| t["parameters"]["type"] == "object"));
}

#[test]
fn non_shapefile_artifacts_are_raw_bytes() {
    let task = load_task(&task_dir("t39_parcels_table"), &Registry::builtin()).unwrap();
    let srv = serve(scripted(&task), None);
    let id = srv.upload(&zip_dir(&task.dir.join("input"))).1["id"].as_str().unwrap().to_string();
    srv.submit(&id, &task.spec.user_prompt);
    assert_eq!(srv.wait_done(&id)["status"], "finished");
    let (code, bytes) = srv.get(&format!("/sessions/{id}/artifacts/output/parcels.csv"));
    assert_eq!(code, 200);
    let on_disk = std::fs::read(srv.state.session(&id).unwrap().sandbox_dir.join("output/parcels.csv")).unwrap();
    assert_eq!(bytes, on_disk);
}

#[test]
fn failing_session_ends_failed() {
    let task = case1();
    let mut steps = task.plan_steps();
    steps[1].calls[0].name = "buffer_v2".into();
    let srv = serve(Arc::new(ScriptedFactory { steps, max_attempts: 2 }), None);
    let id = srv.upload(&zip_dir(&task.dir.join("input"))).1["id"].as_str().unwrap().to_string();
    srv.submit(&id, &task.spec.user_prompt);
    let done = srv.wait_done(&id);
    assert_eq!(done["status"], "failed");
    assert_eq!(srv.get_json(&format!("/sessions/{id}/artifacts")).1["artifacts"].as_array().unwrap().len(), 0);
}
