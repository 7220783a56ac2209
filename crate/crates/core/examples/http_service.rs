//! Drives the HTTP API in-process: create a session, score a round,
//! trip over the pending-scores guard, advance, fetch a MIDI file.
//!
//! To serve the same API on a socket use the binary:
//!
//! ```text
//! cargo run -- serve --addr 127.0.0.1:8080 --data-dir ./sessions
//! cargo run --example http_service
//! ```

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use evomelody::service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (u16, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn send_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let (status, bytes) = send(app, method, uri, body).await;
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    println!("{method} {uri} -> {status}");
    v
}

#[tokio::main]
async fn main() {
    let app = router(Arc::new(AppState::new(None).unwrap()));

    let cfg = json!({ "de": { "population_size": 6, "F": 0.6, "Cr": 0.8, "dimensions": 0, "seed": 42 },
                      "melody": { "notes": 4 } });
    let created = send_json(&app, "POST", "/sessions", Some(cfg)).await;
    let id = created["session_id"].as_str().unwrap().to_string();

    let round = send_json(&app, "GET", &format!("/sessions/{id}/round"), None).await;
    let candidates = round["candidates"].as_array().unwrap();
    println!("bpm {}, first candidate notes: {}", round["bpm"], candidates[0]["notes"]);

    for (k, c) in candidates.iter().enumerate().skip(1) {
        let body = json!({ "candidate_id": c["id"], "score": (k as f64) * 1.5 });
        send_json(&app, "POST", &format!("/sessions/{id}/scores"), Some(body)).await;
    }
    let blocked = send_json(&app, "POST", &format!("/sessions/{id}/advance"), None).await;
    println!("  {}: pending {}", blocked["code"], blocked["details"]["pending"]);

    let body = json!({ "candidate_id": candidates[0]["id"], "score": 9.5 });
    send_json(&app, "POST", &format!("/sessions/{id}/scores"), Some(body)).await;
    let next =
        send_json(&app, "POST", &format!("/sessions/{id}/advance"), Some(json!({ "expected_generation": 0 }))).await;
    println!("  round {} has {} trial(s) to score", next["generation"], next["session"]["pending"]);

    let best = candidates[0]["id"].as_str().unwrap();
    let (status, smf) = send(&app, "GET", &format!("/sessions/{id}/midi/{best}"), None).await;
    println!("GET midi/{best} -> {status}, {} bytes starting {:02X?}", smf.len(), &smf[..4]);
}
