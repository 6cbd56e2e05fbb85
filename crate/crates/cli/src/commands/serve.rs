use std::io::Write;
use std::sync::Arc;

use vidhumor::backends::ScriptedTransport;
use vidhumor_service::{mock_backend_router, router, AppState, Router, ServiceConfig};

use super::Context;
use crate::error::CliError;
use crate::{MockBackendArgs, ServeArgs};

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new("internal", e.to_string()))
}

/// Binds, prints the resolved address (so port 0 is discoverable) and
/// serves until Ctrl-C.
fn run(app: Router, host: &str, port: u16) -> Result<(), CliError> {
    let rt = runtime()?;
    rt.block_on(async move {
        let addr = format!("{host}:{port}");
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::new("io", format!("bind {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::new("io", e.to_string()))?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        vidhumor_service::serve(app, listener)
            .await
            .map_err(|e| CliError::new("io", e.to_string()))
    })
}

pub fn serve(ctx: &Context, args: ServeArgs) -> Result<(), CliError> {
    let config = ServiceConfig {
        media_root: args.media_root.clone().unwrap_or_else(|| ctx.cfg.media_root(&args.manifest)),
        reports_dir: args.reports_dir.clone().unwrap_or_else(|| ctx.cfg.reports_dir(&args.manifest)),
        ui_dir: args.ui_dir.clone(),
        manifest: args.manifest.clone(),
    };
    if let Some(ui) = &config.ui_dir {
        if !ui.join("index.html").is_file() {
            return Err(CliError::config(format!("{}: no index.html", ui.display())));
        }
    }
    let state = AppState::open(config)?;
    run(router(state), &args.host, args.port)
}

pub fn mock_backend(_ctx: &Context, args: MockBackendArgs) -> Result<(), CliError> {
    let transport = ScriptedTransport::load(&args.fixture)?;
    run(mock_backend_router(Arc::new(transport)), &args.host, args.port)
}
