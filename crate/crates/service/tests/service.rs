use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use multirent::money::money;
use multirent::Money;
use multirent_service::{read_snapshot, router, write_snapshot, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn app() -> Router {
    router(Arc::new(AppState::new()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let body = body.map_or_else(Body::empty, |b| Body::from(b.to_string()));
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body)
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn session_with(app: &Router, name: &str) -> String {
    let (status, body) = call(
        app,
        Method::POST,
        "/sessions",
        Some(json!({ "instance": fixture(name) })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["version"], 0);
    body["id"].as_str().unwrap().to_string()
}

async fn solve(app: &Router, id: &str, request: Value) -> (StatusCode, Value) {
    call(app, Method::POST, &format!("/sessions/{id}/solve"), Some(request)).await
}

fn cedar_lane() -> Value {
    json!({
        "op": "add_apartment",
        "name": "Cedar Lane",
        "rent": "300",
        "values": [["100", "100", "100"], ["300", "0", "0"], ["300", "0", "0"]]
    })
}

#[tokio::test]
async fn example_one_nef_maximin_gives_zero_utilities() {
    let app = app();
    let id = session_with(&app, "example-one.json").await;
    let (status, doc) = solve(&app, &id, json!({ "notion": "nef", "objective": "maximin" })).await;
    assert_eq!(status, StatusCode::OK, "{doc}");
    assert_eq!(doc["status"], "solved");
    assert_eq!(doc["utilities"], json!(["0", "0"]));
    assert_eq!(doc["objective_value"], "0");

    let (status, ledger) = call(&app, Method::GET, &format!("/sessions/{id}/ledger"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ledger["end"], doc["prices"]);

    let (status, envy) = call(&app, Method::GET, &format!("/sessions/{id}/envy"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(envy.as_array().unwrap().len(), 2);
    assert_eq!(envy[0][0], json!(["0", "0"]));
}

#[tokio::test]
async fn uef_on_example_one_is_reported_as_none() {
    let app = app();
    let id = session_with(&app, "example-one.json").await;
    let (status, doc) = solve(&app, &id, json!({ "notion": "uef" })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc["status"], "none_exists");
    assert!(doc.get("prices").is_none() || doc["prices"].is_null());
}

#[tokio::test]
async fn whatif_adds_an_apartment_without_committing() {
    let app = app();
    let id = session_with(&app, "monotonicity-single.json").await;
    let (status, before) = solve(&app, &id, json!({ "notion": "nef", "objective": "maximin" })).await;
    assert_eq!(status, StatusCode::OK);
    let uri = format!("/sessions/{id}/whatif");
    let request = json!({ "notion": "nef", "objective": "maximin", "edit": cedar_lane() });
    let (status, doc) = call(&app, Method::POST, &uri, Some(request.clone())).await;
    assert_eq!(status, StatusCode::OK, "{doc}");
    let value: Money = doc["objective_value"].as_str().unwrap().parse().unwrap();
    assert!(value < money(50), "{value}");
    assert_eq!(call(&app, Method::POST, &uri, Some(request)).await.1, doc);

    let (_, session) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(session["version"], 0);
    assert_eq!(session["solves"], 1);
    assert_eq!(session["instance"], fixture("monotonicity-single.json"));

    let (status, after) = solve(&app, &id, json!({ "notion": "nef", "objective": "maximin" })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after["objective_value"], "50");
    assert_eq!(after, before);
}

#[tokio::test]
async fn edits_commit_and_bump_the_version() {
    let app = app();
    let id = session_with(&app, "monotonicity-single.json").await;
    let uri = format!("/sessions/{id}/instance");
    let (status, body) = call(
        &app,
        Method::PUT,
        &uri,
        Some(json!({ "base_version": 0, "edits": [cedar_lane()] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version"], 1);
    assert_eq!(body["instance"], fixture("monotonicity.json"));

    let (status, body) = call(&app, Method::PUT, &uri, Some(json!({ "base_version": 0, "edits": [] }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "conflict");

    let edits = json!({ "edits": [
        { "op": "set_rent", "apartment": 1, "rent": "250" },
        { "op": "remove_apartment", "apartment": 0 }
    ]});
    let (status, body) = call(&app, Method::PUT, &uri, Some(edits)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version"], 2);
    assert_eq!(body["instance"]["apartments"][0]["name"], "Cedar Lane");
    assert_eq!(body["instance"]["apartments"][0]["rent"], "250");

    let (status, body) = call(
        &app,
        Method::PUT,
        &uri,
        Some(json!({ "instance": fixture("example-one.json") })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["version"], 3);
}

#[tokio::test]
async fn failed_edit_batches_leave_the_instance_alone() {
    let app = app();
    let id = session_with(&app, "monotonicity.json").await;
    let uri = format!("/sessions/{id}/instance");
    let edits = json!({ "edits": [
        { "op": "set_rent", "apartment": 0, "rent": "10" },
        { "op": "set_value", "player": 5, "apartment": 0, "room": 0, "value": "1" }
    ]});
    let (status, body) = call(&app, Method::PUT, &uri, Some(edits)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "invalid");
    assert!(body["message"].as_str().unwrap().contains("player 5"));
    let (_, session) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(session["version"], 0);
    assert_eq!(session["instance"], fixture("monotonicity.json"));

    let short = json!({ "edits": [{ "op": "add_apartment", "name": "Small", "rent": "1", "values": [["1"]] }] });
    assert_eq!(
        call(&app, Method::PUT, &uri, Some(short)).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    let unknown = json!({ "edits": [{ "op": "paint", "apartment": 0 }] });
    assert_eq!(
        call(&app, Method::PUT, &uri, Some(unknown)).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let app = app();
    for (method, uri) in [
        (Method::GET, "/sessions/missing"),
        (Method::GET, "/sessions/missing/ledger"),
        (Method::GET, "/sessions/missing/envy"),
    ] {
        let (status, body) = call(&app, method, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(body["error"], "not_found");
    }
    let (status, _) = solve(&app, "missing", json!({ "notion": "nef" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_bodies_are_unprocessable() {
    let app = app();
    let id = session_with(&app, "example-five.json").await;
    let (status, body) = solve(&app, &id, json!({ "notion": "fairest" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["message"].as_str().unwrap().contains("line 1"), "{body}");

    let mut bad = fixture("example-five.json");
    bad["values"][0][0] = json!(["1"]);
    let (status, _) = call(&app, Method::POST, "/sessions", Some(json!({ "instance": bad }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, _) = call(&app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
}

#[tokio::test]
async fn ledger_and_envy_need_a_solve_first() {
    let app = app();
    let (_, body) = call(&app, Method::POST, "/sessions", None).await;
    let id = body["id"].as_str().unwrap();
    assert_eq!(
        solve(&app, id, json!({ "notion": "nef" })).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    let (status, _) = call(&app, Method::GET, &format!("/sessions/{id}/ledger"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn solve_responses_pass_their_own_check() {
    let app = app();
    for (name, notion, objective) in [
        ("example-five.json", "nef", "maximin"),
        ("example-five.json", "strong-nef", "none"),
        ("monotonicity.json", "nef", "equitability"),
        ("monotonicity.json", "strong-nef", "maximin"),
        ("example-one.json", "def", "none"),
    ] {
        let id = session_with(&app, name).await;
        let (status, doc) = solve(&app, &id, json!({ "notion": notion, "objective": objective })).await;
        assert_eq!(status, StatusCode::OK, "{doc}");
        assert_eq!(doc["status"], "solved", "{name} {notion}");
        let req = json!({ "notion": notion, "solution": doc });
        let (status, report) = call(&app, Method::POST, &format!("/sessions/{id}/check"), Some(req)).await;
        assert_eq!(status, StatusCode::OK, "{report}");
        assert_eq!(report["outcome"], "holds", "{name} {notion}: {report}");
    }
}

#[tokio::test]
async fn sessions_survive_a_snapshot() {
    let state = Arc::new(AppState::new());
    let app = router(state.clone());
    let id = session_with(&app, "example-five.json").await;
    solve(&app, &id, json!({ "notion": "strong-nef" })).await;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sessions.json");
    write_snapshot(&state, &path).await.unwrap();

    let restored = router(Arc::new(AppState::from_sessions(read_snapshot(&path).unwrap())));
    let (status, session) = call(&restored, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["solves"], 1);
    let (status, ledger) = call(&restored, Method::GET, &format!("/sessions/{id}/ledger"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ledger["end"], json!([["99", "1"], ["1", "99"]]));
}
