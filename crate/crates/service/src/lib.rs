//! HTTP API over the study protocol and the explanation engine.
//!
//! Sessions live in memory and in an append-only JSONL log in the data
//! directory; the log is replayed on startup. See `docs/api.md` for the
//! request and response bodies.

pub mod config;
pub mod error;
pub mod explain;
mod routes;
pub mod state;

use std::sync::Arc;

use alterfactual_study::clock::SystemClock;
use axum::http::{header, HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use config::ServiceConfig;
pub use error::ServiceError;
pub use explain::{ExplainRequest, ModelSource, RequestKind};
pub use state::AppState;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(routes::health))
        .route("/api/sessions", post(routes::create_session))
        .route("/api/sessions/{id}", get(routes::get_state))
        .route("/api/sessions/{id}/submit", post(routes::submit))
        .route("/api/sessions/{id}/events", post(routes::event))
        .route("/api/export.csv", get(routes::export_csv))
        .route("/api/explain", post(routes::explain))
        .with_state(state)
}

fn cors(origins: &[String]) -> std::io::Result<CorsLayer> {
    let origins = origins
        .iter()
        .map(|o| HeaderValue::from_str(o).map_err(|_| std::io::Error::other(format!("bad CORS origin `{o}`"))))
        .collect::<std::io::Result<Vec<_>>>()?;
    Ok(CorsLayer::new()
        .allow_origin(AllowOrigin::list(origins))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION]))
}

/// The router for `config`, with the log replayed and CORS applied.
pub fn app(config: &ServiceConfig) -> Result<(Router, AppState), ServiceError> {
    let study = config.load_study();
    let state = AppState::open(study, &config.data_dir, config.admin_token(), Arc::new(SystemClock))?;
    let mut router = router(state.clone());
    if !config.cors_origins.is_empty() {
        router = router.layer(cors(&config.cors_origins).map_err(|e| ServiceError::BadRequest(e.to_string()))?);
    }
    Ok((router, state))
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let (router, state) = app(&config).map_err(std::io::Error::other)?;
    if let Err(e) = state.study() {
        eprintln!("warning: {e}; session routes answer 503");
    }
    if config.admin_token().is_none() {
        eprintln!("warning: ${} is not set; export and forced conditions are disabled", config.admin_token_env);
    }
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
