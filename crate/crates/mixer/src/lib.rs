//! REST service over a data commons store.
//!
//! Every endpoint is a read. Series lookups that find nothing locally are
//! forwarded to configured remote commons, which speak this same protocol.

pub mod config;
pub mod error;
pub mod federation;
mod routes;
pub mod views;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use bdc_core::Commons;
use tokio::net::TcpListener;

pub use config::{ApiConfig, ConfigError, RemoteEndpoint, BIND_ENV};
pub use error::ApiError;
pub use federation::Federator;
pub use routes::router;

/// Shared handler state. Requests read an immutable snapshot of the store;
/// [`AppState::replace_store`] swaps in a new one without blocking readers.
#[derive(Clone)]
pub struct AppState {
    store: Arc<RwLock<Arc<Commons>>>,
    federator: Arc<Federator>,
}

impl AppState {
    pub fn new(mut commons: Commons, config: &ApiConfig) -> Self {
        commons.stats.set_source_preference(config.source_preference.clone());
        AppState {
            store: Arc::new(RwLock::new(Arc::new(commons))),
            federator: Arc::new(Federator::new(config.remotes.clone(), config.request_timeout_ms)),
        }
    }

    pub fn snapshot(&self) -> Arc<Commons> {
        self.store.read().expect("store lock poisoned").clone()
    }

    pub fn replace_store(&self, mut commons: Commons) {
        let pref = self.snapshot().stats.source_preference().to_vec();
        commons.stats.set_source_preference(pref);
        *self.store.write().expect("store lock poisoned") = Arc::new(commons);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("opening store: {0}")]
    Store(#[from] bdc_core::CommonsError),
    #[error("{addr}: {message}")]
    Bind { addr: String, message: String },
}

/// Binds `listener` and serves until `shutdown` resolves.
pub async fn serve_on(
    listener: TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Starts a server on an already-bound local port in the background and
/// returns its address. Intended for tests and embedding.
pub async fn spawn(state: AppState, addr: &str) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(serve_on(listener, state, std::future::pending()));
    Ok(local)
}

/// Opens the configured store and serves until Ctrl-C.
pub async fn serve(config: ApiConfig) -> Result<(), ServeError> {
    let commons = Commons::open(&config.store)?;
    let listener = TcpListener::bind(&config.bind_address).await.map_err(|e| ServeError::Bind {
        addr: config.bind_address.clone(),
        message: e.to_string(),
    })?;
    let state = AppState::new(commons, &config);
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve_on(listener, state, shutdown).await.map_err(|e| ServeError::Bind {
        addr: config.bind_address.clone(),
        message: e.to_string(),
    })
}
