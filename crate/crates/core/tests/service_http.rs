mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use serde_json::json;

use common::client::{app, drive_participant, get, post, tone_side};
use common::{conditions, segments, spread_model};
use subjeval::design::{design_study, Speaker, StudyKind, StudyPlan};
use subjeval::service::{read_event_log, responses_from_log, Event, ServiceConfig, Stage, StudyService};
use subjeval::sim::simulate_responses;

fn plan(kind: StudyKind, n: usize) -> StudyPlan {
    let speaker = if kind == StudyKind::InterlocApprop { Speaker::Interlocutor } else { Speaker::Agent };
    design_study(kind, &conditions(15), &segments(41, speaker), n, 9).unwrap()
}

fn config(dir: &tempfile::TempDir) -> ServiceConfig {
    ServiceConfig {
        data_dir: dir.path().to_path_buf(),
        media_base_url: "https://cdn.example.org/study".into(),
        seed: 4,
        sync_writes: false,
        ..ServiceConfig::default()
    }
}

fn open(kind: StudyKind, n: usize, dir: &tempfile::TempDir) -> Arc<StudyService> {
    Arc::new(StudyService::open(plan(kind, n), config(dir)).unwrap())
}

async fn start(app: &axum::Router, study: &str, who: &str) -> String {
    let r = post(app, "/sessions", json!({ "study_id": study, "participant_id": who })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{:?}", r.body);
    r.body["session_id"].as_str().unwrap().to_string()
}

/// Instructions and training done; the session is on page 1.
async fn to_pages(app: &axum::Router, sid: &str) {
    let r = post(app, &format!("/sessions/{sid}/advance"), json!({})).await;
    if r.body["stage"] == "audio_check" {
        let side = tone_side(app, sid).await;
        post(app, &format!("/sessions/{sid}/audio-check"), json!({ "heard_side": side })).await;
    }
    let r = post(app, &format!("/sessions/{sid}/advance"), json!({})).await;
    assert_eq!(r.body["stage"], "pages", "{:?}", r.body);
}

fn sliders(page: u32, token: &str) -> serde_json::Value {
    json!({ "token": token, "page_index": page, "sliders": [10, 20, 30, 40, 50, 60, 70, 80] })
}

#[tokio::test]
async fn humanlikeness_session_takes_exactly_ten_pages() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::Humanlikeness, 3, &dir);
    let app = app(&svc);
    let sid = start(&app, "humanlikeness", "p1").await;
    to_pages(&app, &sid).await;
    let mut accepted = 0;
    for page in 1..=11 {
        let r = post(&app, &format!("/sessions/{sid}/responses"), sliders(page, &format!("t{page}"))).await;
        if r.status == StatusCode::OK {
            accepted += 1;
        } else {
            assert_eq!((page, r.status), (11, StatusCode::CONFLICT), "{:?}", r.body);
        }
    }
    assert_eq!(accepted, 10);
    assert_eq!(svc.session(&sid).unwrap().stage, Stage::Demographics);
    let stored = responses_from_log(&svc.events_path()).unwrap();
    assert_eq!(stored.len(), 80);
}

#[tokio::test]
async fn dyadic_session_cannot_skip_audio_check() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::InterlocApprop, 2, &dir);
    let app = app(&svc);
    let sid = start(&app, "interloc_approp", "p1").await;
    let r = post(&app, &format!("/sessions/{sid}/advance"), json!({})).await;
    assert_eq!(r.body["stage"], "audio_check");

    let r = post(&app, &format!("/sessions/{sid}/advance"), json!({})).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = post(&app, &format!("/sessions/{sid}/responses"), json!({ "token": "x", "preference": "equal" })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let page = get(&app, &format!("/sessions/{sid}/page")).await;
    assert_eq!(page.body["stage"], "audio_check");

    // a wrong answer keeps the gate closed and counts the attempt
    let side = tone_side(&app, &sid).await;
    let wrong = if side == "left" { "right" } else { "left" };
    let r = post(&app, &format!("/sessions/{sid}/audio-check"), json!({ "heard_side": wrong })).await;
    assert_eq!((r.body["passed"].clone(), r.body["attempts"].clone()), (json!(false), json!(1)));
    assert_eq!(get(&app, &format!("/sessions/{sid}/page")).await.body["attempts"], 1);
    let side = tone_side(&app, &sid).await;
    let r = post(&app, &format!("/sessions/{sid}/audio-check"), json!({ "heard_side": side })).await;
    assert_eq!(r.body["stage"], "training");
    let page = get(&app, &format!("/sessions/{sid}/page")).await;
    assert_eq!(page.body["page"]["audio_layout"], "stereo_interloc_left_agent_right");
}

#[tokio::test]
async fn monadic_studies_have_no_audio_check() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::SpeechApprop, 2, &dir);
    let app = app(&svc);
    let sid = start(&app, "speech_approp", "p1").await;
    let r = post(&app, &format!("/sessions/{sid}/audio-check"), json!({ "heard_side": "left" })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let r = post(&app, &format!("/sessions/{sid}/advance"), json!({})).await;
    assert_eq!(r.body["stage"], "training");
}

#[tokio::test]
async fn retried_tokens_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::Humanlikeness, 2, &dir);
    let app = app(&svc);
    let sid = start(&app, "humanlikeness", "p1").await;
    to_pages(&app, &sid).await;
    let uri = format!("/sessions/{sid}/responses");
    let first = post(&app, &uri, sliders(1, "tok")).await;
    assert_eq!(first.body["duplicate"], false);
    let again = post(&app, &uri, sliders(1, "tok")).await;
    assert_eq!(again.status, StatusCode::OK);
    assert_eq!(again.body["duplicate"], true);
    assert_eq!(again.body["pages_done"], 1);
    // a different token for a page already done is a stage conflict
    let other = post(&app, &uri, sliders(1, "tok2")).await;
    assert_eq!(other.status, StatusCode::CONFLICT);
    assert_eq!(responses_from_log(&svc.events_path()).unwrap().len(), 8);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_duplicates_store_one_copy() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::Humanlikeness, 2, &dir);
    let app = app(&svc);
    let sid = start(&app, "humanlikeness", "p1").await;
    to_pages(&app, &sid).await;
    let uri = format!("/sessions/{sid}/responses");
    let mut tasks = Vec::new();
    for i in 0..32 {
        let (app, uri) = (app.clone(), uri.clone());
        // half retry one token, half race with fresh tokens
        let token = if i % 2 == 0 { "same".to_string() } else { format!("fresh{i}") };
        tasks.push(tokio::spawn(async move { post(&app, &uri, sliders(1, &token)).await.status }));
    }
    let mut ok = 0;
    for t in tasks {
        let s = t.await.unwrap();
        assert!(s == StatusCode::OK || s == StatusCode::CONFLICT, "{s}");
        ok += usize::from(s == StatusCode::OK);
    }
    assert!(ok >= 1);
    let stored = responses_from_log(&svc.events_path()).unwrap();
    assert_eq!(stored.len(), 8);
    assert_eq!(svc.session(&sid).unwrap().pages_done, 1);
}

#[tokio::test]
async fn schema_violations_are_422() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::Humanlikeness, 2, &dir);
    let app = app(&svc);
    let sid = start(&app, "humanlikeness", "p1").await;
    to_pages(&app, &sid).await;
    let uri = format!("/sessions/{sid}/responses");
    let bad = [
        json!({ "token": "a", "page_index": 1, "sliders": [1, 2, 3] }),
        json!({ "token": "b", "page_index": 1, "sliders": [10, 20, 30, 40, 50, 60, 70, 101] }),
        json!({ "token": "c", "page_index": 1, "sliders": [10, 20, 30, 40, 50, 60, 70, -1] }),
        json!({ "token": "d", "page_index": 1, "preference": "equal" }),
        json!({ "token": "e", "sliders": [10, 20, 30, 40, 50, 60, 70, 80] }),
        json!({ "token": "", "page_index": 1, "sliders": [10, 20, 30, 40, 50, 60, 70, 80] }),
        json!({ "page_index": 1 }),
        json!({ "token": "f", "page_index": 1, "preference": "sideways" }),
    ];
    for b in bad {
        let r = post(&app, &uri, b.clone()).await;
        assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY, "{b}: {:?}", r.body);
        assert!(r.body["error"].is_string());
    }
    assert_eq!(svc.session(&sid).unwrap().pages_done, 0);

    let r = post(&app, "/sessions", json!({ "study_id": "humanlikeness", "participant_id": " " })).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = post(&app, "/sessions", json!({ "study_id": "other", "participant_id": "p9" })).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/sessions/nope/page").await.status, StatusCode::NOT_FOUND);
    let r = post(&app, &format!("/sessions/{sid}/demographics"), json!({ "age_band": "x" })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn completed_participants_cannot_return() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plan(StudyKind::Humanlikeness, 2);
    let records = simulate_responses(&plan, &spread_model(15), 1).unwrap();
    let svc = Arc::new(StudyService::open(plan.clone(), config(&dir)).unwrap());
    let app = app(&svc);
    let mine: Vec<_> = records.iter().filter(|r| r.participant_id == plan.participants[0].participant_id).cloned().collect();
    drive_participant(&app, "humanlikeness", "alice", &mine, false).await;
    let r = post(&app, "/sessions", json!({ "study_id": "humanlikeness", "participant_id": "alice" })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    // an unfinished session is resumed rather than duplicated
    let sid = start(&app, "humanlikeness", "bob").await;
    let r = post(&app, "/sessions", json!({ "study_id": "humanlikeness", "participant_id": "bob" })).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["session_id"], sid);
    assert_eq!(r.body["resumed"], true);

    // both plan slots are taken now
    let r = post(&app, "/sessions", json!({ "study_id": "humanlikeness", "participant_id": "carol" })).await;
    assert_eq!(r.status, StatusCode::CONFLICT);

    let demo = svc.demographics().unwrap();
    assert_eq!(demo[&plan.participants[0].participant_id]["country"], "SE");
}

#[tokio::test]
async fn restart_replays_every_acknowledged_event() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&dir);
    cfg.sync_writes = true;
    let p = plan(StudyKind::Humanlikeness, 4);
    let (sid_a, sid_b);
    {
        let svc = Arc::new(StudyService::open(p.clone(), cfg.clone()).unwrap());
        let app = app(&svc);
        sid_a = start(&app, "humanlikeness", "a").await;
        to_pages(&app, &sid_a).await;
        for page in 1..=3 {
            post(&app, &format!("/sessions/{sid_a}/responses"), sliders(page, &format!("a{page}"))).await;
        }
        svc.snapshot().unwrap();
        // events after the snapshot must come back from the log
        post(&app, &format!("/sessions/{sid_a}/responses"), sliders(4, "a4")).await;
        sid_b = start(&app, "humanlikeness", "b").await;
    }
    let before = read_event_log(&cfg.events_path()).unwrap();

    let svc = Arc::new(StudyService::open(p.clone(), cfg.clone()).unwrap());
    let a = svc.session(&sid_a).unwrap();
    assert_eq!((a.stage, a.pages_done), (Stage::Pages, 4));
    assert_eq!(svc.session(&sid_b).unwrap().stage, Stage::Instructions);
    let app = app(&svc);
    let r = post(&app, &format!("/sessions/{sid_a}/responses"), sliders(4, "a4")).await;
    assert_eq!(r.body["duplicate"], true);
    let r = post(&app, &format!("/sessions/{sid_a}/responses"), sliders(5, "a5")).await;
    assert_eq!(r.body["pages_done"], 5);
    // a new participant gets a fresh plan slot, not one held before the restart
    let sid_c = start(&app, "humanlikeness", "c").await;
    assert_eq!(svc.session(&sid_c).unwrap().plan_participant_id, p.participants[2].participant_id);

    let after = read_event_log(&cfg.events_path()).unwrap();
    assert_eq!(after[..before.len()], before[..]);
    let seqs: Vec<u64> = after.iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (1..=after.len() as u64).collect::<Vec<_>>());
    assert_eq!(responses_from_log(&cfg.events_path()).unwrap().len(), 5 * 8);
    assert!(after.iter().any(|e| matches!(e.event, Event::SessionCreated { .. })));
}

#[tokio::test]
async fn media_is_redirected_without_revealing_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::SpeechApprop, 2, &dir);
    let app = app(&svc);
    let sid = start(&app, "speech_approp", "p1").await;
    to_pages(&app, &sid).await;
    let page = get(&app, &format!("/sessions/{sid}/page")).await;
    let text = page.body.to_string();
    for c in common::CONDITIONS {
        assert!(!text.contains(&format!("\"{c}\"")), "condition {c} leaked: {text}");
    }
    assert!(!text.contains("matched"));
    let slots = page.body["page"]["slots"].as_array().unwrap();
    assert_eq!(slots.len(), 2);
    for s in slots {
        let url = s["media_url"].as_str().unwrap();
        let r = get(&app, url).await;
        assert_eq!(r.status, StatusCode::TEMPORARY_REDIRECT, "{url}");
        assert!(r.location.unwrap().starts_with("https://cdn.example.org/study/"));
    }
    assert_eq!(get(&app, "/media/m0000").await.status, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/health").await.status, StatusCode::OK);
}

#[test]
fn config_file_and_environment() {
    let cfg = ServiceConfig::from_toml("port = 9000\ndata_dir = \"/var/lib/s\"\nsync_writes = false\n").unwrap();
    assert_eq!((cfg.port, cfg.sync_writes), (9000, false));
    assert_eq!(cfg.bind, "127.0.0.1");
    assert!(ServiceConfig::from_toml("prot = 1\n").is_err());

    let mut cfg = cfg;
    let env = |k: &str| match k {
        "SUBJEVAL_PORT" => Some("7000".to_string()),
        "SUBJEVAL_DATA_DIR" => Some("/tmp/d".to_string()),
        "SUBJEVAL_PLAN" => Some("/tmp/plan.json".to_string()),
        _ => None,
    };
    cfg.apply_env(env).unwrap();
    assert_eq!(cfg.port, 7000);
    assert_eq!(cfg.data_dir, std::path::PathBuf::from("/tmp/d"));
    assert_eq!(cfg.plan, std::path::PathBuf::from("/tmp/plan.json"));
    assert_eq!(cfg.events_path(), std::path::PathBuf::from("/tmp/d/events.ndjson"));
    assert!(cfg.apply_env(|k| (k == "SUBJEVAL_PORT").then(|| "high".to_string())).is_err());
}

#[tokio::test]
async fn training_responses_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(StudyKind::Humanlikeness, 1, &dir);
    let app = app(&svc);
    let sid = start(&app, "humanlikeness", "p").await;
    post(&app, &format!("/sessions/{sid}/advance"), json!({})).await;
    let r = post(
        &app,
        &format!("/sessions/{sid}/responses"),
        json!({ "token": "tr", "sliders": [1, 2, 3, 4, 5, 6, 7, 8] }),
    )
    .await;
    assert_eq!(r.body["stage"], "pages");
    let stored = responses_from_log(&svc.events_path()).unwrap();
    assert_eq!(stored.len(), 8);
    assert!(stored.iter().all(|r| r.training && !r.is_attention_check));
    let out = subjeval::ingest::ingest(stored, svc.plan());
    assert_eq!((out.tally.training, out.tally.retained), (8, 0));
}
