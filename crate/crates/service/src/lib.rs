//! HTTP service over planner/worker sessions: upload, submit, stream, fetch.

pub mod archive;
pub mod error;
pub mod routes;
pub mod state;

use std::net::SocketAddr;
use std::sync::Arc;

pub use archive::{extract_upload, zip_shapefile_set};
pub use error::ApiError;
pub use routes::router;
pub use state::{
    AppState, ClientFactory, LayerInfo, OutcomeView, RemoteFactory, ScriptedFactory, ServiceConfig, Session, SessionStatus,
    SessionView, DEFAULT_MAX_UPLOAD, DEFAULT_PORT, INPUT_DIR,
};

/// Binds `addr` and serves until the task is dropped. Returns the bound
/// address (useful with port 0) and the server future.
pub async fn bind(
    addr: SocketAddr,
    state: Arc<AppState>,
) -> std::io::Result<(SocketAddr, impl std::future::Future<Output = std::io::Result<()>>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((local, async move { axum::serve(listener, router(state)).await }))
}
