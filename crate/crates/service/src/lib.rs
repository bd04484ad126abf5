//! HTTP front end for the FL market model.
//!
//! Compute endpoints are pure wrappers over `flmarket-core`. Named scenarios
//! live in a [`store::ScenarioStore`] directory that survives restarts.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::HeaderValue;
use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use api::{routes, ApiError, AppState};
pub use store::{ScenarioRecord, ScenarioStore, StoreError};

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    /// Allowed browser origin; `None` or `*` allows any.
    pub cors_origin: Option<String>,
    /// Built UI assets served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { port: DEFAULT_PORT, data_dir: PathBuf::from("scenarios"), cors_origin: None, static_dir: None }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("invalid CORS origin {0:?}")]
    BadOrigin(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("server i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn cors(origin: Option<&str>) -> Result<CorsLayer, ServeError> {
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    Ok(match origin {
        None | Some("*") => layer.allow_origin(Any),
        Some(o) => layer.allow_origin(HeaderValue::from_str(o).map_err(|_| ServeError::BadOrigin(o.to_string()))?),
    })
}

/// Full application: API routes, CORS and optional static files.
pub fn app(store: Arc<ScenarioStore>, config: &ServiceConfig) -> Result<Router, ServeError> {
    let mut router = routes(AppState { store });
    if let Some(dir) = &config.static_dir {
        router = router.fallback_service(ServeDir::new(dir));
    }
    Ok(router.layer(cors(config.cors_origin.as_deref())?))
}

/// Binds `0.0.0.0:<port>` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let store = Arc::new(ScenarioStore::open(&config.data_dir)?);
    let app = app(store, &config)?;
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
