//! HTTP transport over the command boundary.
//!
//! Each handler turns the path and JSON body into an [`Action`], runs it
//! against the addressed session under that session's lock, persists the
//! result and returns the engine's response body.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Map, Value};
use tokio::sync::{Mutex, RwLock};

use ontogdss_core::command::{apply_action, consensus_view, create_session, framework_view, Action, ApiError};
use ontogdss_core::{EngineContext, FileStore, Session};

pub struct AppState {
    context: EngineContext,
    store: Option<FileStore>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: Mutex<u64>,
}

impl AppState {
    pub fn new(context: EngineContext, store: Option<FileStore>) -> Self {
        AppState {
            context,
            store,
            sessions: RwLock::new(BTreeMap::new()),
            next_id: Mutex::new(1),
        }
    }

    /// Opens the store, loads its catalog into the context and its sessions
    /// into memory.
    pub fn from_store(mut context: EngineContext, store: FileStore) -> Result<Self, ApiError> {
        context.catalog = store.catalog()?;
        let mut sessions = BTreeMap::new();
        for id in store.session_ids()? {
            let session = store.load_session(&id)?;
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        let state = AppState::new(context, Some(store));
        *state.sessions.try_write().expect("fresh lock") = sessions;
        Ok(state)
    }

    pub async fn session_ids(&self) -> Vec<String> {
        self.sessions.read().await.keys().cloned().collect()
    }

    async fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    fn persist(&self, session: &Session) -> Result<(), ApiError> {
        if let Some(store) = &self.store {
            store.save_session(session)?;
        }
        Ok(())
    }

    async fn create(&self, action: Action) -> Result<(StatusCode, Value), ApiError> {
        let Action::CreateSession { id, problem } = action else {
            unreachable!("create is only called with create-session")
        };
        let mut sessions = self.sessions.write().await;
        let id = match id {
            Some(id) if sessions.contains_key(&id) => {
                return Err(ApiError::new("DuplicateId", 409, format!("session {id:?} already exists"))
                    .with_details(json!({ "id": id })))
            }
            Some(id) => id,
            None => {
                let mut next = self.next_id.lock().await;
                loop {
                    let id = format!("session-{}", *next);
                    *next += 1;
                    if !sessions.contains_key(&id) {
                        break id;
                    }
                }
            }
        };
        let session = create_session(id.clone(), &problem, &self.context)?;
        self.persist(&session)?;
        let body = serde_json::to_value(&session).expect("session serializes");
        sessions.insert(id, Arc::new(Mutex::new(session)));
        Ok((StatusCode::CREATED, body))
    }

    async fn mutate(&self, id: &str, action: Action) -> Result<Value, ApiError> {
        let handle = self.handle(id).await?;
        let mut session = handle.lock().await;
        let mut draft = session.clone();
        let body = apply_action(&mut draft, &self.context, &action)?;
        self.persist(&draft)?;
        *session = draft;
        Ok(body)
    }
}

pub struct ApiFailure(pub ApiError);

impl From<ApiError> for ApiFailure {
    fn from(e: ApiError) -> Self {
        ApiFailure(e)
    }
}

impl IntoResponse for ApiFailure {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(code = %self.0.code, "{}", self.0.message);
        } else {
            tracing::debug!(code = %self.0.code, "{}", self.0.message);
        }
        (status, Json(self.0)).into_response()
    }
}

type ApiResult = Result<(StatusCode, Json<Value>), ApiFailure>;

/// Builds an action from a JSON object body plus path-derived fields.
fn action(verb: &str, body: &Bytes, extra: &[(&str, &str)]) -> Result<Action, ApiError> {
    let mut object = if body.iter().all(u8::is_ascii_whitespace) {
        Map::new()
    } else {
        match serde_json::from_slice::<Value>(body) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(ApiError::bad_request("request body must be a JSON object")),
            Err(e) => return Err(ApiError::bad_request(format!("invalid JSON: {e}"))),
        }
    };
    object.insert("verb".into(), verb.into());
    for (k, v) in extra {
        object.insert((*k).into(), (*v).into());
    }
    serde_json::from_value(Value::Object(object)).map_err(|e| ApiError::bad_request(format!("invalid {verb} payload: {e}")))
}

fn ok(body: Value) -> (StatusCode, Json<Value>) {
    (StatusCode::OK, Json(body))
}

async fn create(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let (status, body) = state.create(action("create-session", &body, &[])?).await?;
    Ok((status, Json(body)))
}

async fn list(State(state): State<Arc<AppState>>) -> ApiResult {
    Ok(ok(json!({ "sessions": state.session_ids().await })))
}

async fn show(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let handle = state.handle(&id).await?;
    let session = handle.lock().await;
    Ok(ok(serde_json::to_value(&*session).expect("session serializes")))
}

async fn session_verb(state: &AppState, id: &str, verb: &str, body: &Bytes) -> ApiResult {
    Ok(ok(state.mutate(id, action(verb, body, &[])?).await?))
}

async fn node_verb(state: &AppState, id: &str, node: &str, verb: &str, body: &Bytes) -> ApiResult {
    Ok(ok(state.mutate(id, action(verb, body, &[("node", node)])?).await?))
}

async fn annotate(State(s): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    session_verb(&s, &id, "annotate", &body).await
}

async fn tree(State(s): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    session_verb(&s, &id, "decompose", &body).await
}

async fn panel(State(s): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    session_verb(&s, &id, "select-panel", &body).await
}

async fn advance(State(s): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    session_verb(&s, &id, "advance", &body).await
}

async fn elements(State(s): State<Arc<AppState>>, Path((id, node)): Path<(String, String)>, body: Bytes) -> ApiResult {
    node_verb(&s, &id, &node, "add-element", &body).await
}

async fn relations(State(s): State<Arc<AppState>>, Path((id, node)): Path<(String, String)>, body: Bytes) -> ApiResult {
    node_verb(&s, &id, &node, "relate", &body).await
}

async fn rankings(State(s): State<Arc<AppState>>, Path((id, node)): Path<(String, String)>, body: Bytes) -> ApiResult {
    node_verb(&s, &id, &node, "submit-ranking", &body).await
}

async fn decide(State(s): State<Arc<AppState>>, Path((id, node)): Path<(String, String)>, body: Bytes) -> ApiResult {
    node_verb(&s, &id, &node, "run-decision", &body).await
}

async fn result(State(s): State<Arc<AppState>>, Path((id, node)): Path<(String, String)>, body: Bytes) -> ApiResult {
    node_verb(&s, &id, &node, "record-result", &body).await
}

async fn framework(State(s): State<Arc<AppState>>, Path((id, node)): Path<(String, String)>) -> ApiResult {
    let handle = s.handle(&id).await?;
    let session = handle.lock().await;
    Ok(ok(framework_view(&session, &node, &s.context)?))
}

async fn consensus(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let handle = s.handle(&id).await?;
    let session = handle.lock().await;
    Ok(ok(consensus_view(&session)))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/:id", get(show))
        .route("/sessions/:id/annotations", post(annotate))
        .route("/sessions/:id/tree", post(tree))
        .route("/sessions/:id/panel", post(panel))
        .route("/sessions/:id/advance", post(advance))
        .route("/sessions/:id/consensus", get(consensus))
        .route("/sessions/:id/nodes/:nid/elements", post(elements))
        .route("/sessions/:id/nodes/:nid/relations", post(relations))
        .route("/sessions/:id/nodes/:nid/framework", get(framework))
        .route("/sessions/:id/nodes/:nid/rankings", post(rankings))
        .route("/sessions/:id/nodes/:nid/decide", post(decide))
        .route("/sessions/:id/nodes/:nid/result", post(result))
        .with_state(state)
}
