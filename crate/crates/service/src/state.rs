//! Sessions, their status machine, and the clients that drive them.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::Serialize;

use shapegpt_agent::{
    run_session, Agents, ChatClient, EventLog, PlanStep, PolicyPlannerClient, RemoteClient, RemoteConfig, ScriptedWorker,
    Scripts, SessionConfig,
};
use shapegpt_core::read_dataset;
use shapegpt_core::shapefile::{describe_dataset, DatasetSummary};
use shapegpt_tools::{Registry, Workspace};

use crate::archive::extract_upload;
use crate::error::ApiError;

pub const DEFAULT_MAX_UPLOAD: usize = 64 * 1024 * 1024;
pub const DEFAULT_PORT: u16 = 8080;
/// Directory inside each sandbox that receives the upload.
pub const INPUT_DIR: &str = "input";

/// Builds the planner and worker clients for one submitted task.
pub trait ClientFactory: Send + Sync {
    fn clients(&self, prompt: &str, inputs: &[String]) -> (Box<dyn ChatClient>, Box<dyn ChatClient>);
}

pub struct RemoteFactory(pub RemoteConfig);

impl ClientFactory for RemoteFactory {
    fn clients(&self, _prompt: &str, _inputs: &[String]) -> (Box<dyn ChatClient>, Box<dyn ChatClient>) {
        (Box::new(RemoteClient::new(self.0.clone())), Box::new(RemoteClient::new(self.0.clone())))
    }
}

/// Replays a fixed plan whatever the prompt says.
pub struct ScriptedFactory {
    pub steps: Vec<PlanStep>,
    pub max_attempts: usize,
}

impl ClientFactory for ScriptedFactory {
    fn clients(&self, prompt: &str, _inputs: &[String]) -> (Box<dyn ChatClient>, Box<dyn ChatClient>) {
        let planner = PolicyPlannerClient::new(self.steps.iter().map(|s| s.instruction.clone()), self.max_attempts);
        let worker = ScriptedWorker::new(Scripts::from_plan(prompt, &self.steps));
        (Box::new(planner), Box::new(worker))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Idle,
    Running,
    Finished,
    Failed,
}

impl SessionStatus {
    pub fn name(self) -> &'static str {
        match self {
            SessionStatus::Idle => "idle",
            SessionStatus::Running => "running",
            SessionStatus::Finished => "finished",
            SessionStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerInfo {
    pub path: String,
    pub summary: DatasetSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeView {
    pub success: bool,
    pub summary: String,
    pub subtasks: usize,
    pub exchanges: usize,
    pub had_exception: bool,
}

#[derive(Debug, Default)]
struct Progress {
    prompt: Option<String>,
    outcome: Option<OutcomeView>,
    artifacts: Vec<String>,
}

pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub sandbox_dir: PathBuf,
    pub layers: Vec<LayerInfo>,
    pub log: EventLog,
    status: Mutex<SessionStatus>,
    progress: Mutex<Progress>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub status: SessionStatus,
    pub layers: Vec<LayerInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<OutcomeView>,
    pub artifacts: Vec<String>,
    pub events: usize,
}

impl Session {
    pub fn status(&self) -> SessionStatus {
        *self.status.lock().unwrap()
    }

    /// idle -> running; anything else is refused.
    fn start(&self, prompt: &str) -> Result<(), ApiError> {
        let mut st = self.status.lock().unwrap();
        if *st != SessionStatus::Idle {
            return Err(ApiError::SessionBusy(st.name().to_string()));
        }
        *st = SessionStatus::Running;
        self.progress.lock().unwrap().prompt = Some(prompt.to_string());
        Ok(())
    }

    /// running -> finished | failed.
    fn complete(&self, outcome: OutcomeView, artifacts: Vec<String>) {
        let next = if outcome.success { SessionStatus::Finished } else { SessionStatus::Failed };
        {
            let mut p = self.progress.lock().unwrap();
            p.outcome = Some(outcome);
            p.artifacts = artifacts;
        }
        let mut st = self.status.lock().unwrap();
        debug_assert_eq!(*st, SessionStatus::Running);
        *st = next;
    }

    pub fn artifacts(&self) -> Vec<String> {
        self.progress.lock().unwrap().artifacts.clone()
    }

    pub fn inputs(&self) -> Vec<String> {
        self.layers.iter().map(|l| l.path.clone()).collect()
    }

    pub fn view(&self) -> SessionView {
        let status = self.status();
        let p = self.progress.lock().unwrap();
        SessionView {
            id: self.id.clone(),
            created_at: self.created_at,
            status,
            layers: self.layers.clone(),
            prompt: p.prompt.clone(),
            outcome: p.outcome.clone(),
            artifacts: p.artifacts.clone(),
            events: self.log.len(),
        }
    }
}

pub struct ServiceConfig {
    pub max_upload: usize,
    pub session: SessionConfig,
    /// Parent of all session sandboxes; a temporary directory when unset.
    pub root: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { max_upload: DEFAULT_MAX_UPLOAD, session: SessionConfig::default(), root: None }
    }
}

impl ServiceConfig {
    /// Defaults with SHAPEGPT_MAX_UPLOAD (bytes) applied.
    pub fn from_env() -> ServiceConfig {
        let mut c = ServiceConfig::default();
        if let Some(n) = std::env::var("SHAPEGPT_MAX_UPLOAD").ok().and_then(|v| v.trim().parse().ok()) {
            c.max_upload = n;
        }
        c
    }
}

pub struct AppState {
    pub max_upload: usize,
    pub session_cfg: SessionConfig,
    pub registry: Registry,
    pub factory: Arc<dyn ClientFactory>,
    root: PathBuf,
    _root_guard: Option<tempfile::TempDir>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl AppState {
    pub fn new(cfg: ServiceConfig, registry: Registry, factory: Arc<dyn ClientFactory>) -> std::io::Result<AppState> {
        let (root, guard) = match cfg.root {
            Some(r) => {
                std::fs::create_dir_all(&r)?;
                (r, None)
            }
            None => {
                let t = tempfile::Builder::new().prefix("shapegpt-sessions").tempdir()?;
                (t.path().to_path_buf(), Some(t))
            }
        };
        Ok(AppState {
            max_upload: cfg.max_upload,
            session_cfg: cfg.session,
            registry,
            factory,
            root,
            _root_guard: guard,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    /// Unpacks an uploaded archive into a fresh sandbox.
    pub fn create_session(&self, archive: &[u8]) -> Result<Arc<Session>, ApiError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let sandbox = self.root.join(&id);
        std::fs::create_dir_all(&sandbox).map_err(|e| ApiError::Internal(e.to_string()))?;
        let built = build_layers(archive, &sandbox);
        let layers = match built {
            Ok(l) => l,
            Err(e) => {
                let _ = std::fs::remove_dir_all(&sandbox);
                return Err(e);
            }
        };
        let s = Arc::new(Session {
            id: id.clone(),
            created_at: Utc::now(),
            sandbox_dir: sandbox,
            layers,
            log: EventLog::new(),
            status: Mutex::new(SessionStatus::Idle),
            progress: Mutex::new(Progress::default()),
        });
        self.sessions.write().unwrap().insert(id, s.clone());
        Ok(s)
    }

    /// Marks the session running and returns the job that runs it.
    pub fn submit(self: &Arc<Self>, id: &str, prompt: &str) -> Result<impl FnOnce() + Send + 'static, ApiError> {
        if prompt.trim().is_empty() {
            return Err(ApiError::BadRequest("prompt is empty".into()));
        }
        let s = self.session(id)?;
        s.start(prompt)?;
        let state = self.clone();
        let prompt = prompt.to_string();
        Ok(move || state.run(&s, &prompt))
    }

    fn run(&self, s: &Session, prompt: &str) {
        let inputs = s.inputs();
        let mut ws = match Workspace::new(&s.sandbox_dir) {
            Ok(ws) => ws,
            Err(e) => {
                s.log.close();
                let o = OutcomeView { success: false, summary: e.to_string(), subtasks: 0, exchanges: 0, had_exception: true };
                s.complete(o, Vec::new());
                return;
            }
        };
        let (mut planner, mut worker) = self.factory.clients(prompt, &inputs);
        let out = run_session(
            prompt,
            &inputs,
            &mut ws,
            &self.registry,
            &self.session_cfg,
            Agents { planner: &mut planner, worker: &mut worker },
            &s.log,
        );
        let artifacts = out
            .artifacts
            .iter()
            .filter_map(|p| p.strip_prefix(ws.sandbox_dir()).ok())
            .map(|p| p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"))
            .collect();
        let view = OutcomeView {
            success: out.success,
            summary: out.final_summary,
            subtasks: out.subtasks,
            exchanges: out.exchanges,
            had_exception: out.had_exception,
        };
        s.complete(view, artifacts);
    }
}

fn build_layers(archive: &[u8], sandbox: &Path) -> Result<Vec<LayerInfo>, ApiError> {
    let shps = extract_upload(archive, &sandbox.join(INPUT_DIR), sandbox)?;
    let mut layers = Vec::new();
    for p in shps {
        let d = read_dataset(sandbox.join(&p)).map_err(|e| ApiError::BadArchive(format!("{p}: {e}")))?;
        layers.push(LayerInfo { path: p, summary: describe_dataset(&d, 3) });
    }
    Ok(layers)
}
