//! In-process HTTP driver for the study service.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use subjeval::design::StudyPlan;
use subjeval::ingest::{RawResponse, ResponseRecord};
use subjeval::service::{http::router, StudyService};

pub struct Reply {
    pub status: StatusCode,
    pub body: Value,
    pub location: Option<String>,
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let location = resp
        .headers()
        .get("location")
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    Reply { status, body, location }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body)).await
}

pub fn app(svc: &Arc<StudyService>) -> Router {
    router(svc.clone())
}

/// Learns the served tone side from the media redirect.
pub async fn tone_side(app: &Router, session: &str) -> &'static str {
    let page = get(app, &format!("/sessions/{session}/page")).await;
    assert_eq!(page.body["stage"], "audio_check", "{:?}", page.body);
    let tone = page.body["tone_url"].as_str().unwrap().to_string();
    let r = get(app, &tone).await;
    assert_eq!(r.status, StatusCode::TEMPORARY_REDIRECT);
    if r.location.unwrap().ends_with("tone_left.wav") {
        "left"
    } else {
        "right"
    }
}

fn answer_body(records: &[&ResponseRecord], token: String, page_index: Option<u32>, ts: Option<u64>) -> Value {
    let mut body = json!({ "token": token });
    if let Some(p) = page_index {
        body["page_index"] = json!(p);
    }
    if let Some(t) = ts {
        body["timestamp_ms"] = json!(t);
    }
    match records[0].raw {
        RawResponse::Preference(o) => body["preference"] = json!(o),
        RawResponse::Slider(_) => {
            let mut sorted = records.to_vec();
            sorted.sort_by_key(|r| r.slot);
            let values: Vec<i64> = sorted
                .iter()
                .map(|r| match r.raw {
                    RawResponse::Slider(v) => v,
                    _ => unreachable!(),
                })
                .collect();
            body["sliders"] = json!(values);
        }
    }
    body
}

/// Walks one participant through the whole session flow, answering the rated
/// pages with `records` (the simulator output for that plan slot).
pub async fn drive_participant(app: &Router, study_id: &str, external_id: &str, records: &[ResponseRecord], fail_audio_once: bool) -> String {
    let r = post(app, "/sessions", json!({ "study_id": study_id, "participant_id": external_id })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.body);
    let sid = r.body["session_id"].as_str().unwrap().to_string();
    let total = r.body["total_pages"].as_u64().unwrap() as u32;

    let r = post(app, &format!("/sessions/{sid}/advance"), json!({})).await;
    assert_eq!(r.status, StatusCode::OK);
    if r.body["stage"] == "audio_check" {
        if fail_audio_once {
            let side = tone_side(app, &sid).await;
            let wrong = if side == "left" { "right" } else { "left" };
            let r = post(app, &format!("/sessions/{sid}/audio-check"), json!({ "heard_side": wrong })).await;
            assert_eq!(r.body["passed"], false);
            assert_eq!(r.body["stage"], "audio_check");
        }
        let side = tone_side(app, &sid).await;
        let r = post(app, &format!("/sessions/{sid}/audio-check"), json!({ "heard_side": side })).await;
        assert_eq!(r.body["passed"], true, "{:?}", r.body);
        assert_eq!(r.body["stage"], "training");
    }

    let mut by_page: BTreeMap<u32, Vec<&ResponseRecord>> = BTreeMap::new();
    for rec in records {
        by_page.entry(rec.page_index).or_default().push(rec);
    }
    assert_eq!(by_page.len() as u32, total);

    // training answers reuse page 1's values; they are recorded and dropped later
    let page = get(app, &format!("/sessions/{sid}/page")).await;
    assert_eq!(page.body["stage"], "training");
    let r = post(
        app,
        &format!("/sessions/{sid}/responses"),
        answer_body(&by_page[&1], format!("{sid}-training"), None, None),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{:?}", r.body);
    assert_eq!(r.body["stage"], "pages");

    for (p, recs) in &by_page {
        let page = get(app, &format!("/sessions/{sid}/page")).await;
        assert_eq!(page.body["page_index"], *p);
        let r = post(
            app,
            &format!("/sessions/{sid}/responses"),
            answer_body(recs, format!("{sid}-{p}"), Some(*p), Some(recs[0].timestamp_ms)),
        )
        .await;
        assert_eq!(r.status, StatusCode::OK, "page {p}: {:?}", r.body);
    }
    let page = get(app, &format!("/sessions/{sid}/page")).await;
    assert_eq!(page.body["stage"], "demographics");
    let r = post(
        app,
        &format!("/sessions/{sid}/demographics"),
        json!({ "age_band": "25-34", "country": "SE" }),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["stage"], "done");
    sid
}

/// Drives every plan slot in order; returns the session ids.
pub async fn drive_cohort(svc: &Arc<StudyService>, plan: &StudyPlan, records: &[ResponseRecord]) -> Vec<String> {
    let app = app(svc);
    let mut by_participant: BTreeMap<&str, Vec<ResponseRecord>> = BTreeMap::new();
    for r in records {
        by_participant.entry(r.participant_id.as_str()).or_default().push(r.clone());
    }
    let mut sids = Vec::new();
    for (i, p) in plan.participants.iter().enumerate() {
        let recs = &by_participant[p.participant_id.as_str()];
        let sid = drive_participant(&app, svc.study_id(), &format!("ext-{i:04}"), recs, i % 7 == 3).await;
        assert_eq!(svc.session(&sid).unwrap().plan_participant_id, p.participant_id);
        sids.push(sid);
    }
    sids
}
