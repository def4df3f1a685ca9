//! JSON-over-HTTP facade for chat sessions. Routes and payloads are
//! described in `docs/http-api.md`.

use std::collections::HashMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use bpmn_assistant::{
    find_model, handle_turn, ChatTurnResult, CurrentModel, MockProvider, Modality, Providers, Session, TurnError,
    UploadError, MODELS,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub default_model: String,
    pub default_modality: Modality,
    pub upload_limit: usize,
    /// One JSON file per session when set.
    pub persist_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            default_model: bpmn_assistant::DEFAULT_MODEL.to_string(),
            default_modality: Modality::Json,
            upload_limit: 5 * 1024 * 1024,
            persist_dir: None,
        }
    }
}

/// Progress of the turn in flight, readable while the session is locked.
#[derive(Debug, Default, Clone, Serialize)]
struct Live {
    busy: bool,
    status: Vec<String>,
}

struct Entry {
    session: Arc<tokio::sync::Mutex<Session>>,
    live: Arc<Mutex<Live>>,
    mock: Arc<MockProvider>,
}

pub struct AppState {
    providers: Arc<Providers>,
    config: ServerConfig,
    sessions: Mutex<HashMap<String, Arc<Entry>>>,
}

impl AppState {
    /// Loads persisted sessions when a directory is configured.
    pub fn new(providers: Providers, config: ServerConfig) -> std::io::Result<Arc<Self>> {
        let state = Arc::new(AppState { providers: Arc::new(providers), config, sessions: Mutex::new(HashMap::new()) });
        if let Some(dir) = &state.config.persist_dir {
            std::fs::create_dir_all(dir)?;
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    match Session::load(&path) {
                        Ok(session) => {
                            state.insert(session);
                        }
                        Err(e) => log::warn!("skipping {}: {e}", path.display()),
                    }
                }
            }
        }
        Ok(state)
    }

    fn insert(&self, session: Session) -> Arc<Entry> {
        let id = session.id.clone();
        let entry = Arc::new(Entry {
            session: Arc::new(tokio::sync::Mutex::new(session)),
            live: Arc::default(),
            mock: Arc::new(self.providers.mock().fresh()),
        });
        self.sessions.lock().unwrap_or_else(|p| p.into_inner()).insert(id, entry.clone());
        entry
    }

    fn get(&self, id: &str) -> Option<Arc<Entry>> {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner()).get(id).cloned()
    }

    fn get_or_create(&self, id: &str) -> Arc<Entry> {
        self.get(id).unwrap_or_else(|| {
            self.insert(Session::new(id, &self.config.default_model, self.config.default_modality))
        })
    }

    fn persist(&self, session: &Session) {
        if let Some(dir) = &self.config.persist_dir {
            if let Err(e) = session.save(dir) {
                log::error!("could not persist session {}: {e}", session.id);
            }
        }
    }
}

/// Structured error body: `{"error": {"code", "message", "details"?}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), details: None }
    }

    fn details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    fn body(&self) -> Value {
        let mut error = json!({"code": self.code, "message": self.message});
        if let Some(d) = &self.details {
            error["details"] = d.clone();
        }
        json!({ "error": error })
    }

    fn no_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session `{id}`"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

fn turn_error(e: &TurnError) -> ApiError {
    let status = match e {
        TurnError::Assistant(bpmn_assistant::AssistantError::EmptyInput) => StatusCode::BAD_REQUEST,
        TurnError::Assistant(bpmn_assistant::AssistantError::ProviderUnavailable { .. }) => StatusCode::BAD_GATEWAY,
        TurnError::ReadOnly(_) => StatusCode::CONFLICT,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    };
    let mut error = ApiError::new(status, e.code(), e.user_message());
    let mut details = json!({ "detail": e.to_string() });
    if let TurnError::Assistant(inner) = e {
        details["attempts"] = json!(inner.attempts());
        if let bpmn_assistant::AssistantError::GenerationFailed { report: Some(report), .. } = inner {
            details["report"] = json!(report);
        }
    }
    error.details = Some(details);
    error
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.upload_limit;
    Router::new()
        .route("/api/models", get(list_models))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/chat", post(chat))
        .route("/api/sessions/{id}/status", get(status))
        .route("/api/sessions/{id}/upload", post(upload))
        .route("/api/sessions/{id}/download", get(download))
        .route("/api/sessions/{id}/model", put(select_model))
        .route("/api/sessions/{id}/modality", put(select_modality))
        // Leave room for multipart framing; the handler enforces the limit.
        .layer(DefaultBodyLimit::max(limit + 64 * 1024))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn list_models(State(state): State<Arc<AppState>>) -> Json<Value> {
    let models: Vec<Value> = MODELS
        .iter()
        .map(|m| json!({"name": m.name, "slug": m.slug, "provider": m.provider.display_name()}))
        .collect();
    Json(json!({"models": models, "default": state.config.default_model}))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    model: Option<String>,
    modality: Option<Modality>,
}

#[derive(Debug, Serialize)]
struct SessionView {
    id: String,
    model: String,
    modality: Modality,
    history: Vec<bpmn_assistant::Message>,
    has_diagram: bool,
    editable: bool,
    bpmn_xml: Option<String>,
}

fn view(s: &Session) -> SessionView {
    SessionView {
        id: s.id.clone(),
        model: s.model_name.clone(),
        modality: s.modality,
        history: s.history.clone(),
        has_diagram: s.current.is_some(),
        editable: match &s.current {
            Some(CurrentModel::Model(_)) => true,
            Some(CurrentModel::Document { structured, .. }) => *structured,
            None => false,
        },
        bpmn_xml: s.last_xml.clone(),
    }
}

fn canonical_model(name: &str) -> Result<String, ApiError> {
    find_model(name)
        .map(|m| m.name.to_string())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "UnknownModel", format!("unknown model `{name}`")))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let request = body.map(|Json(b)| b).unwrap_or_default();
    let model = canonical_model(request.model.as_deref().unwrap_or(&state.config.default_model))?;
    let id = format!("{:016x}", rand::random::<u64>());
    let session = Session::new(id, model, request.modality.unwrap_or(state.config.default_modality));
    state.persist(&session);
    let v = view(&session);
    state.insert(session);
    Ok((StatusCode::CREATED, Json(v)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::no_session(&id))?;
    let session = entry.session.lock().await;
    Ok(Json(view(&session)))
}

async fn status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::no_session(&id))?;
    let live = entry.live.lock().unwrap_or_else(|p| p.into_inner()).clone();
    Ok(Json(json!(live)))
}

#[derive(Debug, Deserialize)]
struct ChatRequest {
    message: String,
}

enum Progress {
    Status(String),
    Done(Result<ChatTurnResult, ApiError>),
}

/// Runs a turn on the blocking pool while holding the session lock, so turns
/// within one session are serialized.
async fn run_turn(
    state: Arc<AppState>,
    entry: Arc<Entry>,
    message: String,
    progress: tokio::sync::mpsc::UnboundedSender<Progress>,
) {
    let mut session = entry.session.clone().lock_owned().await;
    {
        let mut live = entry.live.lock().unwrap_or_else(|p| p.into_inner());
        live.busy = true;
        live.status.clear();
    }
    let live = entry.live.clone();
    let mock = entry.mock.clone();
    let providers = state.providers.clone();
    let sender = progress.clone();
    let joined = tokio::task::spawn_blocking(move || {
        let result = match providers.assistant_with(&session.model_name, &mock) {
            Err(e) => Err(turn_error(&TurnError::Assistant(bpmn_assistant::AssistantError::ProviderUnavailable {
                source: e,
                attempts: Vec::new(),
            }))),
            Ok(assistant) => {
                let mut on_status = |s: &str| {
                    live.lock().unwrap_or_else(|p| p.into_inner()).status.push(s.to_string());
                    let _ = sender.send(Progress::Status(s.to_string()));
                };
                handle_turn(&assistant, &mut session, &message, &mut on_status).map_err(|e| turn_error(&e))
            }
        };
        if result.is_ok() {
            state.persist(&session);
        }
        live.lock().unwrap_or_else(|p| p.into_inner()).busy = false;
        result
    })
    .await;
    let result = joined.unwrap_or_else(|e| {
        Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", format!("turn aborted: {e}")))
    });
    let _ = progress.send(Progress::Done(result));
}

async fn chat(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(request): Json<ChatRequest>,
) -> Response {
    let entry = state.get_or_create(&id);
    let (tx, mut rx) = tokio::sync::mpsc::unbounded_channel();
    tokio::spawn(run_turn(state.clone(), entry, request.message, tx));

    let wants_stream = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("text/event-stream"));
    if wants_stream {
        let stream = futures::stream::unfold(rx, |mut rx| async move {
            let event = match rx.recv().await? {
                Progress::Status(s) => Event::default().event("status").data(s),
                Progress::Done(Ok(result)) => Event::default().event("result").data(json!(result).to_string()),
                Progress::Done(Err(e)) => Event::default().event("error").data(e.body().to_string()),
            };
            Some((Ok::<_, Infallible>(event), rx))
        });
        return Sse::new(stream).keep_alive(KeepAlive::default()).into_response();
    }
    while let Some(progress) = rx.recv().await {
        if let Progress::Done(result) = progress {
            return match result {
                Ok(r) => Json(r).into_response(),
                Err(e) => e.into_response(),
            };
        }
    }
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", "turn ended without a result").into_response()
}

async fn upload(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    mut multipart: Multipart,
) -> Result<Json<Value>, ApiError> {
    let mut bytes = None;
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BadMultipart", e.to_string()))?
    {
        if field.name() == Some("file") || bytes.is_none() {
            let data = field.bytes().await.map_err(|e| {
                let status = if e.status() == StatusCode::PAYLOAD_TOO_LARGE { StatusCode::PAYLOAD_TOO_LARGE } else { StatusCode::BAD_REQUEST };
                let code = if status == StatusCode::PAYLOAD_TOO_LARGE { "TooLarge" } else { "BadMultipart" };
                ApiError::new(status, code, e.body_text())
            })?;
            bytes = Some(data);
        }
    }
    let bytes = bytes.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "BadMultipart", "expected a `file` field"))?;
    let entry = state.get_or_create(&id);
    let mut session = entry.session.lock().await;
    let outcome = session.upload(&bytes, state.config.upload_limit).map_err(|e| match &e {
        UploadError::TooLarge { .. } => ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "TooLarge", e.to_string()),
        UploadError::MalformedXml(report) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "MalformedXml", e.to_string()).details(json!({"report": report}))
        }
        UploadError::Invalid(report) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidBpmn", e.to_string()).details(json!({"report": report}))
        }
    })?;
    state.persist(&session);
    Ok(Json(json!({"report": outcome.report, "editable": outcome.editable, "bpmn_xml": session.last_xml})))
}

async fn download(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::no_session(&id))?;
    let session = entry.session.lock().await;
    let xml = session
        .download()
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, "NothingToDownload", e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, "application/xml".to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{}.bpmn\"", session.id)),
        ],
        xml.to_string(),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct SelectModel {
    name: String,
}

async fn select_model(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(request): Json<SelectModel>,
) -> Result<Json<SessionView>, ApiError> {
    let name = canonical_model(&request.name)?;
    let entry = state.get(&id).ok_or_else(|| ApiError::no_session(&id))?;
    let mut session = entry.session.lock().await;
    session.model_name = name;
    state.persist(&session);
    Ok(Json(view(&session)))
}

#[derive(Debug, Deserialize)]
struct SelectModality {
    modality: Modality,
}

async fn select_modality(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(request): Json<SelectModality>,
) -> Result<Json<SessionView>, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::no_session(&id))?;
    let mut session = entry.session.lock().await;
    session.modality = request.modality;
    state.persist(&session);
    Ok(Json(view(&session)))
}
