//! HTTP API for the manual safety-triage workflow and evaluation reports,
//! plus a fixture-replay server for the backend protocol.

mod api;
mod mock;
mod state;

pub use api::{router, CriterionView, MediaUrls, StatsView, TriageItem, TriageQueueView, VerdictRequest, VerdictResponse};
pub use axum::Router;
pub use mock::mock_backend_router;
pub use state::{AppState, ServiceConfig, ServiceError};

/// Serves `app` on an already bound listener until Ctrl-C.
pub async fn serve(app: axum::Router, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
