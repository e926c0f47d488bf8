//! HTTP/JSON service over in-memory sessions.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateSession`] | `{v, sessionId}` |
//! | GET | `/sessions/{id}/views` | | `{v, views: [{name, label, chartSpec, table, warnings}]}` |
//! | POST | `/sessions/{id}/check` | `{expr}` or `{left, right, op}` | safety verdict |
//! | POST | `/sessions/{id}/eval` | `{expr, override?}` | `{v, kind, label, chartSpec, table, warnings}` or `{v, kind, members}` |
//! | POST | `/sessions/{id}/decompose` | `{view, kind, ...}` | `{v, views}` |
//! | DELETE | `/sessions/{id}` | | 204 |
//!
//! Errors are `{v, error: {code, message}, verdict?}` with status 400, 404,
//! 413 or 500. The OpenAPI description is `docs/api.yaml`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};
use tower_http::cors::{Any, CorsLayer};

use vca::dsl::{EvalValue, VcaExpr};
use vca::relcore::RoleHints;
use vca::session::{Decompose, HierarchyDef, Rendered, Session};
use vca::{ArithOp, VcaError, ViewDef};

pub const BODY_LIMIT: usize = 10 * 1024 * 1024;
pub const IDLE_TIMEOUT: Duration = Duration::from_secs(3600);

/// One uploaded table.
#[derive(Debug, Clone, Deserialize)]
pub struct TableUpload {
    pub name: String,
    pub csv: String,
    #[serde(default)]
    pub roles: RoleHints,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub tables: Vec<TableUpload>,
    #[serde(default)]
    pub views: Vec<ViewDef>,
    #[serde(default)]
    pub hierarchy: Option<HierarchyDef>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CheckRequest {
    Expr { expr: String },
    Pair { left: String, right: String, op: String },
}

#[derive(Debug, Deserialize)]
struct EvalRequest {
    expr: String,
    #[serde(default, rename = "override")]
    override_: bool,
}

#[derive(Debug, Deserialize)]
struct DecomposeRequest {
    view: String,
    #[serde(flatten)]
    how: Decompose,
}

struct Entry {
    session: Arc<RwLock<Session>>,
    last_used: Instant,
}

/// Session table. Creation, lookup and eviction take one lock; evaluation
/// runs against the session's own lock.
#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Entry>>>,
    idle: Duration,
}

impl Default for AppState {
    fn default() -> Self {
        Self::with_idle_timeout(IDLE_TIMEOUT)
    }
}

impl AppState {
    pub fn with_idle_timeout(idle: Duration) -> Self {
        AppState { sessions: Arc::default(), idle }
    }

    fn table(&self) -> std::sync::MutexGuard<'_, HashMap<String, Entry>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Drop sessions idle for longer than the timeout. Returns how many.
    pub fn evict_idle(&self) -> usize {
        let now = Instant::now();
        let mut table = self.table();
        let before = table.len();
        table.retain(|_, e| now.duration_since(e.last_used) < self.idle);
        before - table.len()
    }

    pub fn len(&self) -> usize {
        self.table().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let entry = Entry { session: Arc::new(RwLock::new(session)), last_used: Instant::now() };
        self.table().insert(id.clone(), entry);
        id
    }

    fn get(&self, id: &str) -> Result<Arc<RwLock<Session>>, ApiError> {
        self.evict_idle();
        let mut table = self.table();
        let entry = table.get_mut(id).ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))?;
        entry.last_used = Instant::now();
        Ok(entry.session.clone())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    verdict: Option<JsonValue>,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, code: "NotFound", message, verdict: None }
    }

    fn bad_request(message: String) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code: "BadRequest", message, verdict: None }
    }
}

impl From<VcaError> for ApiError {
    fn from(e: VcaError) -> Self {
        let root = e.root();
        let (status, code) = match root {
            VcaError::UnboundView(_) | VcaError::UnknownTable(_) => (StatusCode::NOT_FOUND, "NotFound"),
            VcaError::UnsafeComposition(_) => (StatusCode::BAD_REQUEST, "UnsafeComposition"),
            VcaError::Syntax(_) => (StatusCode::BAD_REQUEST, "SyntaxError"),
            VcaError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "Internal"),
            _ => (StatusCode::BAD_REQUEST, "EngineError"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
            return ApiError { status, code, message: "internal error".into(), verdict: None };
        }
        let verdict = e.verdict().and_then(|v| serde_json::to_value(v).ok());
        ApiError { status, code, message: e.to_string(), verdict }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"v": 1, "error": {"code": self.code, "message": self.message}});
        if let Some(v) = self.verdict {
            body["verdict"] = v;
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn read(s: &RwLock<Session>) -> std::sync::RwLockReadGuard<'_, Session> {
    s.read().unwrap_or_else(|e| e.into_inner())
}

fn rendered_with_name(name: &str, r: Rendered) -> JsonValue {
    let mut v = serde_json::to_value(r).expect("rendered views serialize");
    v["name"] = json!(name);
    v
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: CreateSession = parse_body(&body)?;
    let mut session = Session::new();
    for t in &req.tables {
        session.add_csv(&t.name, &t.csv, &t.roles)?;
    }
    if let Some(h) = req.hierarchy {
        session.set_hierarchy(h)?;
    }
    for d in &req.views {
        session.add_view(d)?;
    }
    state.evict_idle();
    let id = state.insert(session);
    Ok((StatusCode::CREATED, Json(json!({"v": 1, "sessionId": id}))).into_response())
}

async fn list_views(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = state.get(&id)?;
    let s = read(&s);
    let views = s
        .views
        .iter()
        .map(|(name, v)| Ok(rendered_with_name(name, s.render_view(v)?)))
        .collect::<Result<Vec<_>, VcaError>>()?;
    Ok(Json(json!({"v": 1, "views": views})).into_response())
}

async fn check(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: CheckRequest = parse_body(&body)?;
    let s = state.get(&id)?;
    let s = read(&s);
    let verdict = match req {
        CheckRequest::Expr { expr } => s.check(&expr)?,
        CheckRequest::Pair { left, right, op } => {
            let (l, r) = (VcaExpr::view(left), VcaExpr::view(right));
            let e = if op == "union" {
                VcaExpr::new(vca::dsl::ExprKind::UnionCompose {
                    left: Box::new(l),
                    right: Box::new(r),
                    opts: Default::default(),
                })
            } else {
                VcaExpr::stat(l, r, op.parse::<ArithOp>()?)
            };
            s.check_expr(&e)?
        }
    };
    Ok(Json(verdict).into_response())
}

async fn eval(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: EvalRequest = parse_body(&body)?;
    let s = state.get(&id)?;
    let s = read(&s);
    let value = s.eval(&req.expr, req.override_)?;
    let kind = match &value {
        EvalValue::View(_) => "view",
        EvalValue::ViewSet(_) => "viewset",
        EvalValue::Model(_) => "model",
    };
    let mut rendered = s.render_value(value)?;
    let body = if kind == "viewset" {
        json!({"v": 1, "kind": kind, "members": rendered})
    } else {
        let mut one = serde_json::to_value(rendered.remove(0)).expect("rendered views serialize");
        one["v"] = json!(1);
        one["kind"] = json!(kind);
        one
    };
    Ok(Json(body).into_response())
}

async fn decompose(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: DecomposeRequest = parse_body(&body)?;
    let s = state.get(&id)?;
    let mut s = s.write().unwrap_or_else(|e| e.into_inner());
    let names = s.decompose(&req.view, &req.how)?;
    let views = names
        .iter()
        .map(|n| Ok(rendered_with_name(n, s.render_view(s.view(n)?)?)))
        .collect::<Result<Vec<_>, VcaError>>()?;
    Ok(Json(json!({"v": 1, "views": views})).into_response())
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    match state.table().remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT.into_response()),
        None => Err(ApiError::not_found(format!("unknown session {id}"))),
    }
}

pub fn app(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/views", get(list_views))
        .route("/sessions/{id}/check", post(check))
        .route("/sessions/{id}/eval", post(eval))
        .route("/sessions/{id}/decompose", post(decompose))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any))
        .with_state(state)
}

/// Serve on `addr` until the process exits, evicting idle sessions once a
/// minute.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let state = AppState::default();
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            let n = sweeper.evict_idle();
            if n > 0 {
                log::info!("evicted {n} idle sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state)).await
}
