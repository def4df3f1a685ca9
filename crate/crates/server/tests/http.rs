use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use bpmn_assistant::mock::ScriptedResponse;
use bpmn_assistant::{AssistantConfig, MockScript, Providers, Purpose};
use bpmn_core::xml::{strip_di, to_bpmn_xml, validate_xml_structure, BpmnDocument};
use bpmn_core::parse_process;
use bpmn_server::{router, AppState, ServerConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const PROCUREMENT_JSON: &str = include_str!("../../../fixtures/models/procurement.json");
const PROCUREMENT_TEXT: &str = include_str!("../../../fixtures/models/procurement.txt");
const SHARED_JOIN: &str = include_str!("../../../fixtures/uploads/shared_join.bpmn");

fn t(s: &str) -> ScriptedResponse {
    ScriptedResponse::Text(s.to_string())
}

fn script() -> MockScript {
    let mut s = MockScript::default();
    s.push(Some(Purpose::Classify), &["What is"], vec![t(r#"{"intent": "conversational"}"#)])
        .push(Some(Purpose::Classify), &[], vec![t(r#"{"intent": "create"}"#)])
        .push(Some(Purpose::Respond), &[], vec![t("It picks exactly one branch.")])
        .push(Some(Purpose::Generate), &["manager sends"], vec![t(PROCUREMENT_JSON)])
        .push(Some(Purpose::Generate), &[], vec![t("garbage")]);
    s
}

fn state_with(config: ServerConfig) -> Arc<AppState> {
    let providers = Providers::new(script(), Duration::from_secs(5), AssistantConfig::default());
    AppState::new(providers, config).unwrap()
}

fn app() -> Router {
    router(state_with(ServerConfig::default()))
}

async fn send(app: &Router, request: Request<Body>) -> (StatusCode, Vec<u8>) {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn send_json(app: &Router, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, bytes) = send(app, request).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn new_session(app: &Router) -> String {
    let (status, body) = send_json(app, "POST", "/api/sessions", json!({})).await;
    assert_eq!(status, StatusCode::CREATED);
    body["id"].as_str().unwrap().to_string()
}

async fn chat(app: &Router, id: &str, message: &str) -> (StatusCode, Value) {
    send_json(app, "POST", &format!("/api/sessions/{id}/chat"), json!({ "message": message })).await
}

fn multipart(bytes: &[u8]) -> (String, Vec<u8>) {
    let boundary = "XBOUNDARYX";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"d.bpmn\"\r\nContent-Type: application/xml\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(bytes);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    (format!("multipart/form-data; boundary={boundary}"), body)
}

async fn upload(app: &Router, id: &str, bytes: &[u8]) -> (StatusCode, Value) {
    let (content_type, body) = multipart(bytes);
    let request = Request::post(format!("/api/sessions/{id}/upload"))
        .header(header::CONTENT_TYPE, content_type)
        .body(Body::from(body))
        .unwrap();
    let (status, bytes) = send(app, request).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn models_and_selection() {
    let app = app();
    let (status, body) = get(&app, "/api/models").await;
    assert_eq!(status, StatusCode::OK);
    let body: Value = serde_json::from_slice(&body).unwrap();
    let names: Vec<&str> = body["models"].as_array().unwrap().iter().map(|m| m["name"].as_str().unwrap()).collect();
    for name in ["GPT-4o", "GPT-4o mini", "o3-mini", "Claude 3.5 Sonnet", "Gemini 2.0 Flash", "Llama 3.3 70B", "Qwen 2.5 72B", "Deepseek V3", "mock"] {
        assert!(names.contains(&name), "{name}");
    }
    assert_eq!(body["default"], "mock");

    let id = new_session(&app).await;
    let (_, session) = send_json(&app, "GET", &format!("/api/sessions/{id}"), Value::Null).await;
    assert_eq!(session["model"], "mock");
    let (status, session) = send_json(&app, "PUT", &format!("/api/sessions/{id}/model"), json!({"name": "claude-3-5-sonnet"})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["model"], "Claude 3.5 Sonnet");
    let (status, body) = send_json(&app, "PUT", &format!("/api/sessions/{id}/model"), json!({"name": "gpt-99"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "UnknownModel");
    let (status, _) = send_json(&app, "PUT", "/api/sessions/nope/model", json!({"name": "mock"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn create_turn_serves_a_complete_diagram() {
    let app = app();
    let id = new_session(&app).await;
    let (status, result) = chat(&app, &id, PROCUREMENT_TEXT).await;
    assert_eq!(status, StatusCode::OK, "{result}");
    assert_eq!(result["intent"], "create");
    let xml = result["bpmn_xml"].as_str().unwrap();
    assert!(validate_xml_structure(xml).ok);
    let graph = BpmnDocument::parse(xml).unwrap().flow_graph();
    assert_eq!(xml.matches("<bpmndi:BPMNShape ").count(), graph.node_count());
    assert_eq!(xml.matches("<bpmndi:BPMNEdge ").count(), graph.edge_count());
    assert_eq!(result["status_events"].as_array().unwrap().last().unwrap(), "Done");

    let (status, downloaded) = get(&app, &format!("/api/sessions/{id}/download")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(downloaded, xml.as_bytes());

    let (_, live) = get(&app, &format!("/api/sessions/{id}/status")).await;
    let live: Value = serde_json::from_slice(&live).unwrap();
    assert_eq!(live["busy"], false);
    assert_eq!(live["status"], result["status_events"]);
}

#[tokio::test]
async fn conversational_turn_has_no_diagram() {
    let app = app();
    let id = new_session(&app).await;
    let (status, result) = chat(&app, &id, "What is an exclusive gateway?").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result["reply_text"], "It picks exactly one branch.");
    assert!(result["bpmn_xml"].is_null());
}

#[tokio::test]
async fn failed_generation_is_an_error_payload() {
    let app = app();
    let id = new_session(&app).await;
    let (status, body) = chat(&app, &id, "Draw something odd").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "GenerationFailed");
    assert_eq!(body["error"]["details"]["attempts"].as_array().unwrap().len(), 3);
    let (status, body) = get(&app, &format!("/api/sessions/{id}/download")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["error"]["code"], "NothingToDownload");
}

#[tokio::test]
async fn chat_streams_status_events() {
    let app = app();
    let request = Request::post("/api/sessions/streamed/chat")
        .header(header::CONTENT_TYPE, "application/json")
        .header(header::ACCEPT, "text/event-stream")
        .body(Body::from(json!({ "message": PROCUREMENT_TEXT }).to_string()))
        .unwrap();
    let (status, body) = send(&app, request).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(body).unwrap();
    let status_at = text.find("event: status").unwrap();
    let result_at = text.find("event: result").unwrap();
    assert!(status_at < result_at);
    assert!(text.contains("data: Computing the layout"));
    // The session was created on first use.
    let (status, _) = get(&app, "/api/sessions/streamed/download").await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn uploads() {
    let app = app();
    let id = new_session(&app).await;
    let xml = to_bpmn_xml(&parse_process(PROCUREMENT_JSON).unwrap()).unwrap();
    let (status, body) = upload(&app, &id, xml.as_bytes()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["editable"], true);
    assert_eq!(body["report"]["ok"], true);

    let (status, body) = upload(&app, &id, SHARED_JOIN.as_bytes()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["editable"], false);
    let codes: Vec<&str> = body["report"]["issues"].as_array().unwrap().iter().map(|i| i["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"Unstructured"));
    let (_, downloaded) = get(&app, &format!("/api/sessions/{id}/download")).await;
    assert_eq!(strip_di(std::str::from_utf8(&downloaded).unwrap()).unwrap(), SHARED_JOIN);

    let (status, body) = upload(&app, &id, b"%PDF-1.4 definitely not xml").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "MalformedXml");
}

#[tokio::test]
async fn oversized_upload_is_rejected() {
    let app = router(state_with(ServerConfig { upload_limit: 1024, ..Default::default() }));
    let id = new_session(&app).await;
    let big = format!("<a>{}</a>", "x".repeat(2048));
    let (status, body) = upload(&app, &id, big.as_bytes()).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(body["error"]["code"], "TooLarge");
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = app();
    let (a, b) = (new_session(&app).await, new_session(&app).await);
    assert_ne!(a, b);
    let (ra, rb) = tokio::join!(chat(&app, &a, PROCUREMENT_TEXT), chat(&app, &b, "What is a task?"));
    assert_eq!(ra.0, StatusCode::OK);
    assert_eq!(rb.0, StatusCode::OK);
    assert_eq!(get(&app, &format!("/api/sessions/{b}/download")).await.0, StatusCode::NOT_FOUND);
    let (_, sb) = send_json(&app, "GET", &format!("/api/sessions/{b}"), Value::Null).await;
    assert_eq!(sb["history"].as_array().unwrap().len(), 2);
    assert_eq!(sb["has_diagram"], false);
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServerConfig { persist_dir: Some(dir.path().to_path_buf()), ..Default::default() };
    let app = router(state_with(config.clone()));
    let id = new_session(&app).await;
    let (_, result) = chat(&app, &id, PROCUREMENT_TEXT).await;

    let restarted = router(state_with(config));
    let (status, downloaded) = get(&restarted, &format!("/api/sessions/{id}/download")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(downloaded, result["bpmn_xml"].as_str().unwrap().as_bytes());
}
