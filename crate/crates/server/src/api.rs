//! HTTP API over a registry of maps.
//!
//! Every map has its own writer lock; mutations (including the provider call
//! of an enrichment) hold it for their whole duration. Reads never take the
//! lock: each successful mutation publishes a fresh rendered snapshot.

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use nodemind_core::store::{self, Clock, DocumentMeta, NodeRecord, StoreError};
use nodemind_core::{
    EditCommand, EnrichError, EnrichWarning, EnrichmentKind, Engine, MapError, MindMap, NodeId, Provider,
    TemplateCategory, Violation,
};

pub type SharedEngine = Engine<Arc<dyn Provider>>;

/// Error body: `{code, message, detail}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), detail: Value::Null }
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    fn unknown_map(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_map", format!("no map with id `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

impl From<MapError> for ApiError {
    fn from(e: MapError) -> Self {
        let (status, code) = match &e {
            MapError::UnknownNode(_) => (StatusCode::NOT_FOUND, "unknown_node"),
            MapError::NoHistory(_) => (StatusCode::CONFLICT, "no_history"),
            MapError::CycleError { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "cycle"),
            MapError::CannotDeleteRoot => (StatusCode::UNPROCESSABLE_ENTITY, "cannot_delete_root"),
            MapError::EmptyText | MapError::EmptyTopic => (StatusCode::UNPROCESSABLE_ENTITY, "empty_text"),
            MapError::InvalidOrigin => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_origin"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<EnrichError> for ApiError {
    fn from(e: EnrichError) -> Self {
        let message = e.to_string();
        match e {
            EnrichError::EmptyQuery => Self::new(StatusCode::BAD_REQUEST, "empty_query", message),
            EnrichError::EmptyQuestion => Self::new(StatusCode::BAD_REQUEST, "missing_question", message),
            EnrichError::Map(m) => m.into(),
            EnrichError::Provider(p) => Self::new(StatusCode::BAD_GATEWAY, "provider_error", message)
                .with_detail(json!({ "kind": p.kind, "detail": p.detail })),
            EnrichError::GenerationMalformed { reason, raw } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "generation_malformed", message)
                    .with_detail(json!({ "reason": reason, "raw": raw }))
            }
            EnrichError::RedundantContent { rate, candidates, raw } => {
                Self::new(StatusCode::CONFLICT, "redundant_content", message)
                    .with_detail(json!({ "rate": rate, "candidates": candidates, "raw": raw }))
            }
            EnrichError::NoExamples { raw } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "no_examples", message).with_detail(json!({ "raw": raw }))
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_error", e.to_string())
    }
}

/// The state of a map as returned by reads and mutations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapView {
    pub map_id: String,
    pub revision: u64,
    pub can_undo: bool,
    pub can_redo: bool,
    pub tree: NodeRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Created {
    #[serde(flatten)]
    pub view: MapView,
    pub category: TemplateCategory,
    pub warnings: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enriched {
    #[serde(flatten)]
    pub view: MapView,
    pub attached: Vec<NodeRecord>,
    pub warnings: Vec<EnrichWarning>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Commanded {
    #[serde(flatten)]
    pub view: MapView,
    pub created: Option<NodeId>,
}

struct Entry {
    map: MindMap,
    meta: DocumentMeta,
}

struct Published {
    body: String,
    outline: String,
    outline_all: String,
}

struct Session {
    writer: Mutex<Entry>,
    published: RwLock<Arc<Published>>,
}

fn view_of(entry: &Entry) -> MapView {
    MapView {
        map_id: entry.meta.map_id.clone(),
        revision: entry.map.revision(),
        can_undo: entry.map.history().can_undo(),
        can_redo: entry.map.history().can_redo(),
        tree: NodeRecord::from_map(&entry.map, entry.map.root()),
    }
}

fn publish(entry: &Entry) -> Published {
    Published {
        body: serde_json::to_string(&view_of(entry)).expect("view serializes"),
        outline: store::export_outline(&entry.map, false),
        outline_all: store::export_outline(&entry.map, true),
    }
}

/// Shared service state: the engine, the map registry and persistence.
pub struct AppState {
    engine: SharedEngine,
    maps: RwLock<HashMap<String, Arc<Session>>>,
    next_id: AtomicU64,
    data_dir: Option<PathBuf>,
    clock: Arc<dyn Clock>,
}

fn valid_map_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl AppState {
    /// Opens the registry, loading every map document found in `data_dir`.
    pub fn open(engine: SharedEngine, data_dir: Option<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self, StoreError> {
        let state = Self { engine, maps: RwLock::default(), next_id: AtomicU64::new(1), data_dir, clock };
        if let Some(dir) = &state.data_dir {
            std::fs::create_dir_all(dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
            let listing = std::fs::read_dir(dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
            let mut paths: Vec<PathBuf> = listing
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for path in paths {
                let (map, meta) = store::load(&path)?;
                if !valid_map_id(&meta.map_id) {
                    return Err(StoreError::Corrupt(format!("{}: invalid map id `{}`", path.display(), meta.map_id)));
                }
                if let Some(n) = meta.map_id.strip_prefix("map-").and_then(|n| n.parse::<u64>().ok()) {
                    state.next_id.fetch_max(n + 1, Ordering::SeqCst);
                }
                state.insert(Entry { map, meta });
            }
        }
        Ok(state)
    }

    pub fn in_memory(engine: SharedEngine, clock: Arc<dyn Clock>) -> Self {
        Self::open(engine, None, clock).expect("no disk access without a data dir")
    }

    pub fn map_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.maps.read().expect("registry lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn insert(&self, entry: Entry) {
        let id = entry.meta.map_id.clone();
        let session = Session { published: RwLock::new(Arc::new(publish(&entry))), writer: Mutex::new(entry) };
        self.maps.write().expect("registry lock").insert(id, Arc::new(session));
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.maps.read().expect("registry lock").get(id).cloned().ok_or_else(|| ApiError::unknown_map(id))
    }

    fn path_for(&self, id: &str) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| document_path(d, id))
    }

    fn persist(&self, entry: &mut Entry) -> Result<(), StoreError> {
        entry.meta.touch(&*self.clock);
        match self.path_for(&entry.meta.map_id) {
            Some(path) => store::save(&entry.map, &entry.meta, &path),
            None => Ok(()),
        }
    }

    /// Runs `f` under the map's writer lock, then persists and publishes if
    /// it succeeded.
    fn mutate<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut MindMap) -> Result<T, ApiError>,
    ) -> Result<(T, MapView), ApiError> {
        let session = self.session(id)?;
        let mut entry = session.writer.lock().expect("map lock");
        let out = f(&mut entry.map)?;
        self.persist(&mut entry)?;
        *session.published.write().expect("snapshot lock") = Arc::new(publish(&entry));
        Ok((out, view_of(&entry)))
    }

    pub fn create_map(&self, query: &str) -> Result<Created, ApiError> {
        let generated = self.engine.generate_map(query)?;
        let id = format!("map-{}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let mut entry = Entry { map: generated.map, meta: DocumentMeta::new(id, &*self.clock) };
        self.persist(&mut entry)?;
        let view = view_of(&entry);
        self.insert(entry);
        Ok(Created { view, category: generated.category, warnings: generated.warnings })
    }

    pub fn enrich(
        &self,
        id: &str,
        node: NodeId,
        kind: EnrichmentKind,
        question: Option<&str>,
    ) -> Result<Enriched, ApiError> {
        if kind == EnrichmentKind::Explore && question.is_none_or(|q| q.trim().is_empty()) {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "missing_question", "explore needs a question"));
        }
        let ((attached, warnings), view) = self.mutate(id, |map| {
            let result = self.engine.enrich(map, node, kind, question)?;
            let attached = result.attached.iter().map(|&n| NodeRecord::from_map(map, n)).collect();
            Ok((attached, result.warnings))
        })?;
        Ok(Enriched { view, attached, warnings })
    }

    pub fn command(&self, id: &str, cmd: EditCommand) -> Result<Commanded, ApiError> {
        let (applied, view) = self.mutate(id, |map| Ok(map.apply(cmd)?))?;
        Ok(Commanded { view, created: applied.created })
    }

    pub fn undo(&self, id: &str) -> Result<MapView, ApiError> {
        Ok(self.mutate(id, |map| Ok(map.undo()?))?.1)
    }

    pub fn redo(&self, id: &str) -> Result<MapView, ApiError> {
        Ok(self.mutate(id, |map| Ok(map.redo()?))?.1)
    }

    /// The last published view, serialized.
    pub fn view_json(&self, id: &str) -> Result<String, ApiError> {
        let session = self.session(id)?;
        let published = session.published.read().expect("snapshot lock").clone();
        Ok(published.body.clone())
    }

    pub fn export(&self, id: &str, include_collapsed: bool) -> Result<String, ApiError> {
        let session = self.session(id)?;
        let published = session.published.read().expect("snapshot lock").clone();
        Ok(if include_collapsed { published.outline_all.clone() } else { published.outline.clone() })
    }
}

type Shared = Arc<AppState>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.unwrap_or_else(|e| {
        Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", format!("worker failed: {e}")))
    })
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", format!("invalid request body: {e}")))
}

fn parse_node(nid: &str) -> Result<NodeId, ApiError> {
    nid.parse().map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "unknown_node", format!("no node with id `{nid}`")))
}

fn json_text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

#[derive(Deserialize)]
struct CreateBody {
    query: String,
}

async fn create_map(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let CreateBody { query } = parse_body(&body)?;
    let created = blocking(move || state.create_map(&query)).await?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

#[derive(Deserialize, Default)]
struct EnrichBody {
    question: Option<String>,
}

async fn enrich(
    State(state): State<Shared>,
    UrlPath((id, nid, action)): UrlPath<(String, String, String)>,
    body: Bytes,
) -> Result<Json<Enriched>, ApiError> {
    let kind: EnrichmentKind =
        action.parse().map_err(|m: String| ApiError::new(StatusCode::NOT_FOUND, "unknown_action", m))?;
    let node = parse_node(&nid)?;
    let EnrichBody { question } = if body.iter().all(u8::is_ascii_whitespace) { EnrichBody::default() } else { parse_body(&body)? };
    blocking(move || state.enrich(&id, node, kind, question.as_deref())).await.map(Json)
}

async fn command(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Commanded>, ApiError> {
    let cmd: EditCommand = parse_body(&body)?;
    blocking(move || state.command(&id, cmd)).await.map(Json)
}

async fn undo(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<MapView>, ApiError> {
    blocking(move || state.undo(&id)).await.map(Json)
}

async fn redo(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<MapView>, ApiError> {
    blocking(move || state.redo(&id)).await.map(Json)
}

async fn get_map(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    Ok(json_text(StatusCode::OK, state.view_json(&id)?))
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
    #[serde(default)]
    all: bool,
}

async fn export(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    if let Some(f) = q.format.as_deref().filter(|f| *f != "outline") {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "unsupported_format", format!("unsupported export format `{f}`")));
    }
    let text = state.export(&id, q.all)?;
    Ok(([(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], text).into_response())
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/maps", post(create_map))
        .route("/maps/{id}", get(get_map))
        .route("/maps/{id}/export", get(export))
        .route("/maps/{id}/commands", post(command))
        .route("/maps/{id}/undo", post(undo))
        .route("/maps/{id}/redo", post(redo))
        .route("/maps/{id}/nodes/{nid}/{action}", post(enrich))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Shared,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// A server running on its own runtime thread; stops when dropped.
pub struct BackgroundServer {
    addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn start(state: Shared, addr: &str) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener registers");
                let _ = serve(listener, state, async {
                    let _ = rx.await;
                })
                .await;
            });
        });
        Ok(Self { addr, stop: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Path of the document for `map_id` inside `dir`.
pub fn document_path(dir: &Path, map_id: &str) -> PathBuf {
    dir.join(format!("{map_id}.json"))
}
