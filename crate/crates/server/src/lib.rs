//! HTTP facade over the search engine.
//!
//! Handlers are stateless and read the current [`EngineState`] through
//! [`AppState`]. Every response carries the `x-skusearch-schema` header and
//! every non-2xx body is an [`ApiError`].

mod error;
mod state;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::middleware::map_response;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use skusearch_core::{FieldKind, SkuId, SkuRecord};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

pub use error::{ApiError, ErrorCode};
pub use state::{index_fingerprint, AppState, Health, ReindexSource, Status};

pub const SCHEMA_VERSION: &str = "1";
pub const SCHEMA_HEADER: &str = "x-skusearch-schema";
/// JSON Schema (draft 2020-12) for every response body.
pub const SCHEMA_JSON: &str = include_str!("../schema/v1.json");

pub const DEFAULT_SUGGEST_LIMIT: usize = 10;
pub const MAX_SUGGEST_LIMIT: usize = 50;

#[derive(Debug, Clone, Default)]
pub struct ServerOptions {
    /// Allowed CORS origins. Empty means any origin.
    pub cors_origins: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionDto {
    pub key: String,
    pub sku_id: SkuId,
    pub field_kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestBody {
    pub suggestions: Vec<SuggestionDto>,
    pub elapsed_ms: f64,
}

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn query_text(params: &Params) -> Result<String, ApiError> {
    let Query(map) = params
        .as_ref()
        .map_err(|e| ApiError::bad_request(e.body_text()))?;
    match map.get("q").map(|q| q.trim()) {
        Some(q) if !q.is_empty() => Ok(q.to_string()),
        _ => Err(ApiError::bad_request("query parameter q must be non-empty")),
    }
}

fn suggest_limit(params: &Params) -> Result<usize, ApiError> {
    let Ok(Query(map)) = params else {
        return Ok(DEFAULT_SUGGEST_LIMIT);
    };
    match map.get("limit") {
        None => Ok(DEFAULT_SUGGEST_LIMIT),
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(ApiError::bad_request(format!(
                "limit must be an integer between 1 and {MAX_SUGGEST_LIMIT}"
            ))),
            Ok(n) => Ok(n.min(MAX_SUGGEST_LIMIT)),
        },
    }
}

async fn suggest(
    State(app): State<Arc<AppState>>,
    params: Params,
) -> Result<Json<SuggestBody>, ApiError> {
    let q = query_text(&params)?;
    let limit = suggest_limit(&params)?;
    let engine = app.engine()?;
    let resp = engine.suggest(&q, limit);
    Ok(Json(SuggestBody {
        suggestions: resp
            .suggestions
            .into_iter()
            .map(|s| SuggestionDto {
                key: s.matched_key,
                sku_id: s.sku_id,
                field_kind: s.field_kind,
            })
            .collect(),
        elapsed_ms: resp.elapsed_ms,
    }))
}

async fn search(State(app): State<Arc<AppState>>, params: Params) -> Result<Response, ApiError> {
    let q = query_text(&params)?;
    let engine = app.engine()?;
    let start = Instant::now();
    let mut resp = tokio::task::spawn_blocking(move || engine.search(&q))
        .await
        .map_err(|e| ApiError::internal(format!("search task failed: {e}")))??;
    // Report the time including the hop to the blocking pool.
    resp.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(Json(resp).into_response())
}

async fn sku(
    State(app): State<Arc<AppState>>,
    Path(raw): Path<String>,
) -> Result<Json<SkuRecord>, ApiError> {
    let id: u64 = raw
        .parse()
        .map_err(|_| ApiError::bad_request(format!("sku id {raw:?} is not an unsigned integer")))?;
    let engine = app.engine()?;
    engine
        .catalog
        .get(SkuId(id))
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no sku with id {id}")))
}

async fn reindex(State(app): State<Arc<AppState>>) -> Result<Response, ApiError> {
    app.start_reindex()?;
    Ok((StatusCode::ACCEPTED, Json(app.health())).into_response())
}

async fn healthz(State(app): State<Arc<AppState>>) -> Json<Health> {
    Json(app.health())
}

async fn schema() -> Response {
    (
        [(axum::http::header::CONTENT_TYPE, "application/schema+json")],
        SCHEMA_JSON,
    )
        .into_response()
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::method_not_allowed()
}

async fn stamp_schema(mut resp: Response) -> Response {
    resp.headers_mut().insert(
        HeaderName::from_static(SCHEMA_HEADER),
        HeaderValue::from_static(SCHEMA_VERSION),
    );
    resp
}

fn cors(options: &ServerOptions) -> CorsLayer {
    let origins: Vec<HeaderValue> = options
        .cors_origins
        .iter()
        .filter(|o| o.as_str() != "*")
        .filter_map(|o| HeaderValue::from_str(o).ok())
        .collect();
    let layer = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    if options.cors_origins.is_empty() || options.cors_origins.iter().any(|o| o == "*") {
        layer.allow_origin(Any)
    } else {
        layer.allow_origin(AllowOrigin::list(origins))
    }
}

pub fn router(app: Arc<AppState>, options: &ServerOptions) -> Router {
    Router::new()
        .route("/suggest", get(suggest))
        .route("/search", get(search))
        .route("/sku/{id}", get(sku))
        .route("/admin/reindex", post(reindex))
        .route("/healthz", get(healthz))
        .route("/schema", get(schema))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(app)
        .layer(map_response(stamp_schema))
        .layer(cors(options))
}

/// Serves until the listener fails or the process stops.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Arc<AppState>,
    options: &ServerOptions,
) -> std::io::Result<()> {
    let addr: Option<SocketAddr> = listener.local_addr().ok();
    if let Some(addr) = addr {
        log::info!("listening on http://{addr}");
    }
    axum::serve(listener, router(app, options)).await
}
