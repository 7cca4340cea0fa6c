//! HTTP/JSON service and CLI around [`molflow_core`].
//!
//! The model and dataset are loaded once and shared read-only by every
//! handler; the job store is the only mutable state.

pub mod api;
pub mod cli;
mod error;

use std::net::SocketAddr;
use std::sync::Arc;

use molflow_core::platform::{model_version, DatasetEntry, JobStore};
use molflow_core::FlowModel;

pub use api::router;
pub use error::{ApiError, ErrorBody};

#[derive(Clone)]
pub struct AppState {
    pub model: Arc<FlowModel>,
    pub dataset: Arc<Vec<DatasetEntry>>,
    pub jobs: JobStore,
    pub model_version: String,
}

impl AppState {
    pub fn new(model: FlowModel, dataset: Vec<DatasetEntry>) -> Self {
        let model_version = model_version(&model);
        AppState { model: Arc::new(model), dataset: Arc::new(dataset), jobs: JobStore::new(), model_version }
    }
}

/// Bind `addr` and serve in the background, returning the bound address
/// (useful with port 0).
pub async fn spawn(state: AppState, addr: SocketAddr) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = router(state);
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    Ok((local, handle))
}

/// Bind and serve until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
