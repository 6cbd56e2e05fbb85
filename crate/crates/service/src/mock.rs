use std::str::FromStr;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::Value;
use vidhumor::backends::wire::Envelope;
use vidhumor::backends::{BackendKind, Transport};

/// `POST /<kind>` replays the transport's answer as an envelope. Lookup
/// misses are `{ok: false}` envelopes with status 200.
pub fn mock_backend_router(transport: Arc<dyn Transport>) -> Router {
    Router::new().route("/{kind}", post(call)).with_state(transport)
}

async fn call(
    State(transport): State<Arc<dyn Transport>>,
    Path(kind): Path<String>,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Envelope>) {
    let Ok(kind) = BackendKind::from_str(&kind) else {
        return (StatusCode::NOT_FOUND, Json(Envelope::failure(format!("unknown backend kind {kind:?}"))));
    };
    let result = tokio::task::spawn_blocking(move || transport.call(kind, &body)).await;
    let envelope = match result {
        Ok(Ok(data)) => Envelope::success(data),
        Ok(Err(e)) => Envelope::failure(e.to_string()),
        Err(e) => Envelope::failure(format!("handler failed: {e}")),
    };
    (StatusCode::OK, Json(envelope))
}
