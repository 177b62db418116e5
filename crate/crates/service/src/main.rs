use std::sync::Arc;

use clap::Parser;
use multirent_service::{read_snapshot, router, write_snapshot, AppState, Config};

#[tokio::main]
async fn main() -> Result<(), String> {
    let config = Config::parse();
    let state = match &config.snapshot_path {
        Some(path) if path.exists() => AppState::from_sessions(read_snapshot(path)?),
        _ => AppState::new(),
    };
    let state = Arc::new(state);
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", config.port))
        .await
        .map_err(|e| format!("cannot bind port {}: {e}", config.port))?;
    eprintln!("listening on port {}", config.port);
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())?;
    if let Some(path) = &config.snapshot_path {
        write_snapshot(&state, path)
            .await
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}
