//! HTTP front end for a [`Scorer`].
//!
//! `POST /api/analyze` splits and scores a document once for every source
//! and caches the result in a session. `GET /api/analyze/{id}` re-sorts or
//! switches source from the cache without featurizing again.
//! `GET /api/sources` lists the sources. Anything else falls through to an
//! optional static directory.

mod api;
pub mod session;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::Router;
use checkworthy_core::pipeline::Scorer;

pub use api::{color_bin, AnalyzeRequest, AnalyzeResponse, ScoredSentence, SortMode};
pub use session::{Clock, Lookup, ManualClock, SessionRecord, SessionStore, SystemClock, DEFAULT_TTL};

pub const DEFAULT_MAX_BYTES: usize = 100_000;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub ttl: Duration,
    /// Upper bound on the submitted text, in bytes.
    pub max_bytes: usize,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            ttl: DEFAULT_TTL,
            max_bytes: DEFAULT_MAX_BYTES,
            static_dir: None,
        }
    }
}

/// Shared, mostly immutable server state.
pub struct AppState {
    pub scorer: Option<Arc<Scorer>>,
    pub sessions: SessionStore,
    pub max_bytes: usize,
}

impl AppState {
    pub fn new(scorer: Option<Arc<Scorer>>, config: &ServiceConfig) -> Self {
        AppState {
            scorer,
            sessions: SessionStore::new(config.ttl),
            max_bytes: config.max_bytes,
        }
    }

    pub fn with_sessions(scorer: Option<Arc<Scorer>>, sessions: SessionStore, max_bytes: usize) -> Self {
        AppState {
            scorer,
            sessions,
            max_bytes,
        }
    }
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let app = api::routes(state);
    match static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(scorer: Arc<Scorer>, addr: &str, config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(Some(scorer), &config));
    let app = router(state, config.static_dir.clone());
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
