use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;
use skusearch_core::catalog::load_catalog;
use skusearch_core::{build_indexes, CatalogFormat, EngineConfig, EngineError, EngineState};

use crate::error::{ApiError, ErrorCode};

/// Where a reindex reads its catalog from and how it builds.
#[derive(Debug, Clone)]
pub struct ReindexSource {
    pub catalog: PathBuf,
    pub format: CatalogFormat,
    pub config: EngineConfig,
    /// When set, the rebuilt index is also written here.
    pub persist_dir: Option<PathBuf>,
}

impl ReindexSource {
    fn build(&self) -> Result<EngineState, EngineError> {
        let catalog = load_catalog(&self.catalog, self.format)?;
        let state = build_indexes(catalog, self.config.clone())?;
        if let Some(dir) = &self.persist_dir {
            state.persist(dir)?;
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ready,
    Building,
    NotReady,
}

#[derive(Debug, Clone, Serialize)]
pub struct Health {
    pub status: Status,
    pub catalog_size: usize,
    pub index_fingerprint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_error: Option<ApiError>,
}

/// Shared handle to the live engine. The only mutable pieces are the
/// current-state pointer and the reindex bookkeeping.
pub struct AppState {
    current: RwLock<Option<Arc<EngineState>>>,
    building: AtomicBool,
    last_error: Mutex<Option<ApiError>>,
    source: Option<ReindexSource>,
}

pub fn index_fingerprint(state: &EngineState) -> String {
    let short = |s: &str| s.get(..16).unwrap_or(s).to_string();
    format!(
        "{}-{}",
        short(&state.fingerprint),
        short(&state.catalog_checksum)
    )
}

impl AppState {
    pub fn new(engine: EngineState, source: Option<ReindexSource>) -> Self {
        Self::from_shared(Arc::new(engine), source)
    }

    pub fn from_shared(engine: Arc<EngineState>, source: Option<ReindexSource>) -> Self {
        AppState {
            current: RwLock::new(Some(engine)),
            building: AtomicBool::new(false),
            last_error: Mutex::new(None),
            source,
        }
    }

    /// A state with no engine loaded yet; call [`AppState::start_reindex`]
    /// to build one in the background.
    pub fn empty(source: Option<ReindexSource>) -> Self {
        AppState {
            current: RwLock::new(None),
            building: AtomicBool::new(false),
            last_error: Mutex::new(None),
            source,
        }
    }

    pub fn is_building(&self) -> bool {
        self.building.load(Ordering::Acquire)
    }

    /// The engine to serve a new request with, or `not_ready` while a
    /// rebuild is underway or nothing has been loaded.
    pub fn engine(&self) -> Result<Arc<EngineState>, ApiError> {
        if self.is_building() {
            return Err(ApiError::not_ready("index rebuild in progress"));
        }
        self.snapshot()
            .ok_or_else(|| ApiError::not_ready("no index loaded"))
    }

    fn snapshot(&self) -> Option<Arc<EngineState>> {
        self.current.read().expect("state lock poisoned").clone()
    }

    pub fn swap(&self, engine: EngineState) {
        *self.current.write().expect("state lock poisoned") = Some(Arc::new(engine));
    }

    pub fn health(&self) -> Health {
        let snap = self.snapshot();
        let status = if self.is_building() {
            Status::Building
        } else if snap.is_some() {
            Status::Ready
        } else {
            Status::NotReady
        };
        Health {
            status,
            catalog_size: snap.as_ref().map_or(0, |s| s.catalog.len()),
            index_fingerprint: snap.as_deref().map(index_fingerprint),
            last_error: self.last_error.lock().expect("error lock poisoned").clone(),
        }
    }

    /// Claims the rebuild slot and runs the build on the blocking pool.
    /// Returns `conflict` if a rebuild is already running.
    pub fn start_reindex(self: &Arc<Self>) -> Result<(), ApiError> {
        let Some(source) = self.source.clone() else {
            return Err(ApiError::bad_request(
                "server was started without a reindex source",
            ));
        };
        if self
            .building
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .is_err()
        {
            return Err(ApiError::conflict("reindex already in progress"));
        }
        let this = Arc::clone(self);
        tokio::task::spawn_blocking(move || {
            let result = source.build();
            let mut last_error = this.last_error.lock().expect("error lock poisoned");
            match result {
                Ok(engine) => {
                    log::info!("reindex finished: {} records", engine.catalog.len());
                    this.swap(engine);
                    *last_error = None;
                }
                Err(err) => {
                    log::error!("reindex failed: {err}");
                    let mut api = ApiError::from(err);
                    if api.code == ErrorCode::BadRequest {
                        api.code = ErrorCode::Internal;
                    }
                    *last_error = Some(api);
                }
            }
            this.building.store(false, Ordering::Release);
        });
        Ok(())
    }
}
