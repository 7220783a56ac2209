mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use axum::Router;
use evomelody::service::{router, AppState, RoundView};
use serde_json::{json, Value};

use common::*;

fn app() -> (Arc<AppState>, Router) {
    let state = Arc::new(AppState::new(None).unwrap());
    (state.clone(), router(state))
}

async fn create(app: &Router, seed: u64) -> String {
    let (status, body) =
        call_json(app, "POST", "/sessions", Some(serde_json::to_value(scripted_config(seed)).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

async fn round(app: &Router, id: &str) -> RoundView {
    let (status, body) = call_json(app, "GET", &format!("/sessions/{id}/round"), None).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_value(body).unwrap()
}

async fn score_all(app: &Router, id: &str) {
    for c in round(app, id).await.candidates.into_iter().filter(|c| c.pending) {
        let body = json!({ "candidate_id": c.id, "score": scripted_score(&c.notes) });
        let (status, _) = call_json(app, "POST", &format!("/sessions/{id}/scores"), Some(body)).await;
        assert_eq!(status, StatusCode::OK);
    }
}

#[tokio::test]
async fn create_validates_config() {
    let (_, app) = app();
    let mut cfg = serde_json::to_value(scripted_config(1)).unwrap();
    cfg["de"]["population_size"] = json!(3);
    let (status, body) = call_json(&app, "POST", "/sessions", Some(cfg)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "invalid_config");
    assert!(body["details"]["violations"][0].as_str().unwrap().contains("population_size"));

    for partial in [json!({}), json!({ "melody": { "notes": 4 } }), json!({ "de": { "seed": 5 } })] {
        let (status, body) = call_json(&app, "POST", "/sessions", Some(partial.clone())).await;
        assert_eq!(status, StatusCode::CREATED, "{partial}: {body}");
    }

    let (status, body) = call_json(&app, "POST", "/sessions", Some(json!({ "de": "nope" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "invalid_request");
}

#[tokio::test]
async fn round_view_carries_playable_notes() {
    let (_, app) = app();
    let id = create(&app, 2).await;
    let view = round(&app, &id).await;
    assert_eq!(view.generation, 0);
    assert_eq!(view.bpm, 120.0);
    assert_eq!(view.candidates.len(), 8);
    assert!(view.candidates.iter().all(|c| c.pending && c.notes.len() == 8 && c.score.is_none()));

    let (status, list) = call_json(&app, "GET", "/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list[0]["session_id"], id.as_str());
    assert_eq!(list[0]["state"], "scoring_initial");
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let (_, app) = app();
    let (status, body) = call_json(&app, "GET", "/sessions/missing/round", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_session");

    let id = create(&app, 3).await;
    let body = json!({ "candidate_id": "g7-s00", "score": 5.0 });
    let (status, body) = call_json(&app, "POST", &format!("/sessions/{id}/scores"), Some(body)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_candidate");

    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/midi/g7-s00"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn scores_decrement_pending_and_resubmission_is_idempotent() {
    let (_, app) = app();
    let id = create(&app, 4).await;
    let uri = format!("/sessions/{id}/scores");
    let body = json!({ "candidate_id": "g0-s03", "score": 7.5 });
    let (status, first) = call_json(&app, "POST", &uri, Some(body.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(first["session"]["pending"], 7);
    assert!(!first["pending"].as_array().unwrap().contains(&json!("g0-s03")));

    let (status, again) = call_json(&app, "POST", &uri, Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, first);

    for bad in [json!(10.5), json!(-1), json!("7")] {
        let (status, body) =
            call_json(&app, "POST", &uri, Some(json!({ "candidate_id": "g0-s01", "score": bad }))).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    }
}

#[tokio::test]
async fn advance_blocks_with_exact_pending_ids() {
    let (_, app) = app();
    let id = create(&app, 5).await;
    let view = round(&app, &id).await;
    for c in view.candidates.iter().skip(1).take(6) {
        let body = json!({ "candidate_id": c.id, "score": 5.0 });
        call_json(&app, "POST", &format!("/sessions/{id}/scores"), Some(body)).await;
    }
    let (status, body) = call_json(&app, "POST", &format!("/sessions/{id}/advance"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "pending_scores");
    assert_eq!(body["details"]["pending"], json!(["g0-s00", "g0-s07"]));
}

#[tokio::test]
async fn midi_endpoint_serves_smf_bytes() {
    let (state, app) = app();
    let id = create(&app, 6).await;
    let (status, bytes) = call(&app, "GET", &format!("/sessions/{id}/midi/g0-s02"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&bytes[..4], b"MThd");
    let direct = state.snapshot(&id).await.unwrap().midi(&"g0-s02".into()).unwrap();
    assert_eq!(bytes, direct);
    let parsed = parse_smf(&bytes).unwrap();
    assert_eq!(parsed.events.len(), 16);
}

#[tokio::test]
async fn concurrent_advances_step_once() {
    let (state, app) = app();
    let id = create(&app, 7).await;
    score_all(&app, &id).await;
    let uri = format!("/sessions/{id}/advance");
    let body = Some(json!({ "expected_generation": 0 }));
    let (a, b) = tokio::join!(call_json(&app, "POST", &uri, body.clone()), call_json(&app, "POST", &uri, body));
    let mut statuses = [a.0, b.0];
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
    let loser = if a.0 == StatusCode::CONFLICT { a.1 } else { b.1 };
    assert_eq!(loser["code"], "state_conflict");
    let s = state.snapshot(&id).await.unwrap();
    assert_eq!(s.round.generation, 1);
    assert_eq!(s.history.len(), 1);

    // without the guard the second advance meets the new round's pending scores
    score_all(&app, &id).await;
    let (x, y) = tokio::join!(call_json(&app, "POST", &uri, None), call_json(&app, "POST", &uri, None));
    assert!([x.0, y.0].contains(&StatusCode::OK));
    assert!([x.0, y.0].contains(&StatusCode::CONFLICT));
    assert_eq!(state.snapshot(&id).await.unwrap().round.generation, 2);
}

#[tokio::test]
async fn finish_is_idempotent_and_freezes_the_session() {
    let (_, app) = app();
    let id = create(&app, 8).await;
    score_all(&app, &id).await;
    let uri = format!("/sessions/{id}/finish");
    let (status, first) = call_json(&app, "POST", &uri, None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, second) = call_json(&app, "POST", &uri, None).await;
    assert_eq!(first, second);
    let entries = first["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 8);
    let scores: Vec<f64> = entries.iter().map(|e| e["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(entries[0]["midi_file"], format!("{}.mid", entries[0]["candidate_id"].as_str().unwrap()));

    let body = json!({ "candidate_id": "g0-s00", "score": 1.0 });
    let (status, body) = call_json(&app, "POST", &format!("/sessions/{id}/scores"), Some(body)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "session_finished");
}

#[tokio::test]
async fn data_dir_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = router(Arc::new(AppState::new(Some(dir.path().to_path_buf())).unwrap()));
        let id = create(&app, 9).await;
        score_all(&app, &id).await;
        let (status, _) = call_json(&app, "POST", &format!("/sessions/{id}/advance"), None).await;
        assert_eq!(status, StatusCode::OK);
        id
    };
    assert!(dir.path().join(format!("{id}.json")).exists());
    std::fs::write(dir.path().join("junk.json"), b"{ not a session").unwrap();

    let state = Arc::new(AppState::new(Some(dir.path().to_path_buf())).unwrap());
    let app = router(state.clone());
    let (status, summary) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["generation"], 1);
    assert_eq!(summary["state"], "scoring_trials");
    let (_, doc) = call(&app, "GET", &format!("/sessions/{id}/document"), None).await;
    let doc: Value = serde_json::from_slice(&doc).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert!(state.snapshot(&id).await.unwrap().replay_diff().is_empty());
}
