use std::convert::Infallible;
use std::path::{Component, Path as FsPath};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::multipart::MultipartRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio_stream::wrappers::ReceiverStream;
use tokio_stream::{Stream, StreamExt};

use shapegpt_tools::{export_schemas, DocFormat};

use crate::archive::zip_shapefile_set;
use crate::error::ApiError;
use crate::state::{AppState, SessionView};

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/task", post(submit_task))
        .route("/sessions/{id}/events", get(stream_events))
        .route("/sessions/{id}/artifacts", get(list_artifacts))
        .route("/sessions/{id}/artifacts/{*name}", get(fetch_artifact))
        .route("/tools", get(tools))
        .layer(DefaultBodyLimit::disable())
        .with_state(state)
}

async fn create_session(
    State(st): Shared,
    mp: Result<Multipart, MultipartRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let mut mp = mp.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let mut upload: Option<Vec<u8>> = None;
    while let Some(mut field) = mp.next_field().await.map_err(|e| ApiError::BadRequest(e.body_text()))? {
        if upload.is_some() || (field.name() != Some("file") && field.file_name().is_none()) {
            continue;
        }
        let mut buf = Vec::new();
        while let Some(chunk) = field.chunk().await.map_err(|e| ApiError::BadRequest(e.body_text()))? {
            if buf.len() + chunk.len() > st.max_upload {
                return Err(ApiError::OversizeUpload(st.max_upload));
            }
            buf.extend_from_slice(&chunk);
        }
        upload = Some(buf);
    }
    let bytes = upload.ok_or_else(|| ApiError::BadRequest("multipart body has no 'file' part".into()))?;
    let st2 = st.clone();
    let s = tokio::task::spawn_blocking(move || st2.create_session(&bytes))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(s.view())))
}

async fn get_session(State(st): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(st.session(&id)?.view()))
}

#[derive(Deserialize)]
struct TaskBody {
    prompt: String,
}

async fn submit_task(
    State(st): Shared,
    Path(id): Path<String>,
    body: Result<Json<TaskBody>, axum::extract::rejection::JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let Json(body) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let job = st.submit(&id, &body.prompt)?;
    tokio::task::spawn_blocking(job);
    Ok((StatusCode::ACCEPTED, Json(json!({"accepted": true, "id": id, "status": "running"}))))
}

#[derive(Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

/// Server-sent events: `id` is the sequence number and `data` the event
/// JSON. The stream ends once the session log is closed and drained.
async fn stream_events(
    State(st): Shared,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>, ApiError> {
    let s = st.session(&id)?;
    let last_seen = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok());
    let mut after = q.after.or(last_seen).unwrap_or(0);
    let (tx, rx) = tokio::sync::mpsc::channel(64);
    let log = s.log.clone();
    tokio::task::spawn_blocking(move || loop {
        let (events, closed) = log.wait_since(after, Duration::from_millis(200));
        for e in events {
            after = e.seq;
            if tx.blocking_send(e).is_err() {
                return;
            }
        }
        if closed || tx.is_closed() {
            return;
        }
    });
    let stream = ReceiverStream::new(rx).map(|e| Ok(SseEvent::default().id(e.seq.to_string()).data(e.to_json())));
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn list_artifacts(State(st): Shared, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = st.session(&id)?;
    let items: Vec<Value> = s
        .artifacts()
        .into_iter()
        .map(|name| {
            let p = s.sandbox_dir.join(&name);
            let size = std::fs::metadata(&p).map(|m| m.len()).unwrap_or(0);
            let is_shp = name.to_ascii_lowercase().ends_with(".shp");
            json!({
                "name": name,
                "kind": if is_shp { "shapefile" } else { "file" },
                "size": size,
                "download": format!("/sessions/{}/artifacts/{}", s.id, name),
            })
        })
        .collect();
    Ok(Json(json!({"status": s.status(), "artifacts": items})))
}

fn check_name(name: &str) -> Result<(), ApiError> {
    let p = FsPath::new(name);
    let ok = !name.is_empty()
        && !name.contains('\\')
        && !name.contains('\0')
        && p.components().all(|c| matches!(c, Component::Normal(_)));
    if ok {
        Ok(())
    } else {
        Err(ApiError::PathTraversal(name.to_string()))
    }
}

async fn fetch_artifact(State(st): Shared, Path((id, name)): Path<(String, String)>) -> Result<Response, ApiError> {
    let s = st.session(&id)?;
    check_name(&name)?;
    if !s.artifacts().iter().any(|a| a == &name) {
        return Err(ApiError::UnknownArtifact(name));
    }
    let path = s.sandbox_dir.join(&name);
    let root = s.sandbox_dir.canonicalize().map_err(|e| ApiError::Internal(e.to_string()))?;
    let real = path.canonicalize().map_err(|_| ApiError::UnknownArtifact(name.clone()))?;
    if !real.starts_with(&root) {
        return Err(ApiError::PathTraversal(name));
    }
    let file_name = real.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let is_shp = file_name.to_ascii_lowercase().ends_with(".shp");
    let body = tokio::task::spawn_blocking(move || if is_shp { zip_shapefile_set(&real) } else { std::fs::read(&real) })
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let (ctype, download) = if is_shp {
        let stem = file_name[..file_name.len() - 4].to_string();
        ("application/zip", format!("{stem}.zip"))
    } else {
        (content_type(&file_name), file_name)
    };
    Ok((
        [(header::CONTENT_TYPE, ctype.to_string()), (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{download}\""))],
        body,
    )
        .into_response())
}

fn content_type(name: &str) -> &'static str {
    match name.rsplit('.').next().map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("png") => "image/png",
        Some("csv") => "text/csv",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    }
}

async fn tools(State(st): Shared) -> Json<Value> {
    let text = export_schemas(&st.registry, DocFormat::Json);
    Json(serde_json::from_str(&text).expect("exported schema is JSON"))
}
