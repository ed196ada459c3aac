//! Participant-facing study service.
//!
//! [`StudyService`] is the transport-independent core: every mutation is
//! validated against the session, appended to the event log, and only then
//! applied to in-memory state. Replaying the log through the same `apply`
//! path rebuilds the state after a restart. [`http::router`] exposes it over
//! HTTP.

mod config;
pub mod http;
mod log;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::ServiceConfig;
pub use log::{read_event_log, responses_from_log, Event, EventLog, LoggedEvent, Snapshot, EVENTS_SCHEMA, SNAPSHOT_SCHEMA};

use crate::design::{derive_seed, AudioLayout, MatchStatus, ParticipantPlan, Side, StudyKind, StudyPlan};
use crate::ingest::{PreferenceOption, RawResponse, ResponseRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Instructions,
    AudioCheck,
    Training,
    Pages,
    Demographics,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    /// Identifier supplied by the recruiting platform.
    pub participant_id: String,
    /// Participant slot of the plan this session follows.
    pub plan_participant_id: String,
    pub stage: Stage,
    /// Number of completed rating pages.
    pub pages_done: u32,
    pub created_at_ms: u64,
    pub updated_at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_challenge: Option<Side>,
    #[serde(default)]
    pub audio_attempts: u32,
    /// Submission token of each completed page, keyed by page index.
    #[serde(default)]
    pub page_tokens: BTreeMap<u32, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServiceError {
    NotFound(String),
    /// Request conflicts with the session's stage or history.
    Conflict(String),
    /// Request body violates the schema for the current page.
    Unprocessable(String),
    Internal(String),
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServiceError::NotFound(m) => write!(f, "not found: {m}"),
            ServiceError::Conflict(m) => write!(f, "conflict: {m}"),
            ServiceError::Unprocessable(m) => write!(f, "unprocessable: {m}"),
            ServiceError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for ServiceError {}

impl From<crate::Error> for ServiceError {
    fn from(e: crate::Error) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

type SvcResult<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub study_id: String,
    pub participant_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub stage: Stage,
    pub pages_done: u32,
    pub total_pages: u32,
    /// True when an existing in-progress session was returned.
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponses {
    /// Client-generated idempotency token.
    pub token: String,
    /// 1-based page index; omitted for the training page.
    #[serde(default)]
    pub page_index: Option<u32>,
    #[serde(default)]
    pub sliders: Option<Vec<i64>>,
    #[serde(default)]
    pub preference: Option<PreferenceOption>,
    #[serde(default)]
    pub timestamp_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitAck {
    pub accepted: usize,
    pub stage: Stage,
    pub pages_done: u32,
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioCheckAnswer {
    pub heard_side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioCheckResult {
    pub passed: bool,
    pub attempts: u32,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaSlot {
    pub slot: u32,
    /// Opaque media URL; carries neither condition nor match status.
    pub media_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseSchema {
    Sliders { count: u32, min: i64, max: i64 },
    Preference { options: Vec<PreferenceOption> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageContent {
    pub question: String,
    pub audio_layout: AudioLayout,
    pub slots: Vec<MediaSlot>,
    pub response: ResponseSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum StageView {
    Instructions { text: String },
    AudioCheck { tone_url: String, attempts: u32 },
    Training { page: PageContent },
    Pages { page_index: u32, total_pages: u32, page: PageContent },
    Demographics { fields: Vec<String> },
    Done,
}

pub const DEMOGRAPHIC_FIELDS: [&str; 4] = ["age_band", "gender", "country", "english_proficiency"];

struct Registry {
    sessions: HashMap<String, Arc<Mutex<Session>>>,
    by_participant: HashMap<String, String>,
    /// Plan slots already handed to a session.
    assigned: Vec<bool>,
    created: u64,
}

pub struct StudyService {
    plan: Arc<StudyPlan>,
    config: ServiceConfig,
    study_id: String,
    /// Opaque media key -> stimulus id (or attention-check asset).
    media: HashMap<String, String>,
    media_keys: HashMap<String, String>,
    registry: RwLock<Registry>,
    log: Mutex<EventLog>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn lock_err<T>(_: T) -> ServiceError {
    ServiceError::Internal("state lock poisoned".into())
}

impl StudyService {
    /// Opens the service, restoring state from the snapshot and event log in
    /// `config.data_dir`.
    pub fn open(plan: StudyPlan, config: ServiceConfig) -> crate::Result<Self> {
        std::fs::create_dir_all(&config.data_dir)?;
        let (log, events) = EventLog::open(&config.events_path(), config.sync_writes)?;
        let study_id = config
            .study_id
            .clone()
            .unwrap_or_else(|| plan.study_kind.as_str().to_string());

        let mut media = HashMap::new();
        let mut media_keys = HashMap::new();
        for (i, s) in plan.stimuli.iter().enumerate() {
            let key = format!("m{:016x}", derive_seed(config.seed ^ 0x6d65_6469_61, i as u64));
            media.insert(key.clone(), s.stimulus_id.clone());
            media_keys.insert(s.stimulus_id.clone(), key);
        }

        let registry = Registry {
            sessions: HashMap::new(),
            by_participant: HashMap::new(),
            assigned: vec![false; plan.participants.len()],
            created: 0,
        };
        let service = StudyService {
            plan: Arc::new(plan),
            config,
            study_id,
            media,
            media_keys,
            registry: RwLock::new(registry),
            log: Mutex::new(log),
        };

        let mut from_seq = 0;
        if let Some(snap) = Snapshot::load(&service.config.snapshot_path())? {
            from_seq = snap.last_seq;
            for s in snap.sessions {
                service.restore_session(s)?;
            }
        }
        for e in events.into_iter().filter(|e| e.seq > from_seq) {
            service.replay(e)?;
        }
        Ok(service)
    }

    pub fn plan(&self) -> &StudyPlan {
        &self.plan
    }

    pub fn study_id(&self) -> &str {
        &self.study_id
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn events_path(&self) -> PathBuf {
        self.config.events_path()
    }

    fn plan_index(&self, plan_participant_id: &str) -> crate::Result<usize> {
        self.plan
            .participants
            .iter()
            .position(|p| p.participant_id == plan_participant_id)
            .ok_or_else(|| crate::Error::invalid(format!("log references unknown plan slot {plan_participant_id}")))
    }

    fn restore_session(&self, s: Session) -> crate::Result<()> {
        let idx = self.plan_index(&s.plan_participant_id)?;
        let mut reg = self.registry.write().map_err(|_| crate::Error::invalid("state lock poisoned"))?;
        reg.assigned[idx] = true;
        reg.created += 1;
        reg.by_participant.insert(s.participant_id.clone(), s.session_id.clone());
        reg.sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
        Ok(())
    }

    fn replay(&self, e: LoggedEvent) -> crate::Result<()> {
        if let Event::SessionCreated { participant_id, plan_participant_id, audio_challenge } = &e.event {
            let session = Session {
                session_id: e.session_id.clone(),
                participant_id: participant_id.clone(),
                plan_participant_id: plan_participant_id.clone(),
                stage: Stage::Instructions,
                pages_done: 0,
                created_at_ms: e.at_ms,
                updated_at_ms: e.at_ms,
                audio_challenge: *audio_challenge,
                audio_attempts: 0,
                page_tokens: BTreeMap::new(),
                training_token: None,
            };
            return self.restore_session(session);
        }
        let handle = self
            .session_handle(&e.session_id)
            .map_err(|_| crate::Error::invalid(format!("event {} references unknown session", e.seq)))?;
        let mut s = handle.lock().map_err(|_| crate::Error::invalid("state lock poisoned"))?;
        apply(&mut s, &e.event, e.at_ms, self.plan.pages_per_participant);
        Ok(())
    }

    /// Writes a snapshot of all sessions covering every event logged so far.
    pub fn snapshot(&self) -> crate::Result<()> {
        // Holding the log lock keeps new events out while sessions are copied.
        let log = self.log.lock().map_err(|_| crate::Error::invalid("state lock poisoned"))?;
        let reg = self.registry.read().map_err(|_| crate::Error::invalid("state lock poisoned"))?;
        let mut sessions = Vec::with_capacity(reg.sessions.len());
        for h in reg.sessions.values() {
            sessions.push(h.lock().map_err(|_| crate::Error::invalid("state lock poisoned"))?.clone());
        }
        sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        Snapshot {
            schema: SNAPSHOT_SCHEMA.into(),
            last_seq: log.last_seq(),
            sessions,
        }
        .store(&self.config.snapshot_path())
    }

    fn session_handle(&self, session_id: &str) -> SvcResult<Arc<Mutex<Session>>> {
        self.registry
            .read()
            .map_err(lock_err)?
            .sessions
            .get(session_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {session_id}")))
    }

    pub fn session(&self, session_id: &str) -> SvcResult<Session> {
        Ok(self.session_handle(session_id)?.lock().map_err(lock_err)?.clone())
    }

    fn participant_plan(&self, s: &Session) -> SvcResult<&ParticipantPlan> {
        self.plan
            .participant(&s.plan_participant_id)
            .ok_or_else(|| ServiceError::Internal(format!("plan slot {} missing", s.plan_participant_id)))
    }

    /// Appends `event` and applies it to `session` once it is durable.
    fn commit(&self, session: &mut Session, event: Event) -> SvcResult<()> {
        let at = now_ms();
        self.log
            .lock()
            .map_err(lock_err)?
            .append(&session.session_id, at, event.clone())?;
        apply(session, &event, at, self.plan.pages_per_participant);
        Ok(())
    }

    fn view(&self, s: &Session, resumed: bool) -> SessionView {
        SessionView {
            session_id: s.session_id.clone(),
            stage: s.stage,
            pages_done: s.pages_done,
            total_pages: self.plan.pages_per_participant,
            resumed,
        }
    }

    pub fn create_session(&self, req: &CreateSession) -> SvcResult<SessionView> {
        if req.study_id != self.study_id {
            return Err(ServiceError::NotFound(format!("study {}", req.study_id)));
        }
        if req.participant_id.trim().is_empty() {
            return Err(ServiceError::Unprocessable("participant_id must not be empty".into()));
        }
        let mut reg = self.registry.write().map_err(lock_err)?;
        if let Some(sid) = reg.by_participant.get(&req.participant_id) {
            let s = reg.sessions[sid].lock().map_err(lock_err)?;
            if s.stage == Stage::Done {
                return Err(ServiceError::Conflict(format!(
                    "participant {} already completed this study",
                    req.participant_id
                )));
            }
            return Ok(self.view(&s, true));
        }
        let slot = reg
            .assigned
            .iter()
            .position(|a| !a)
            .ok_or_else(|| ServiceError::Conflict("all participant slots of the plan are taken".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, reg.created));
        let session_id = format!("s{:016x}{:016x}", rng.random::<u64>(), rng.random::<u64>());
        let audio_challenge = (self.plan.study_kind == StudyKind::InterlocApprop)
            .then(|| if rng.random_bool(0.5) { Side::Left } else { Side::Right });
        let event = Event::SessionCreated {
            participant_id: req.participant_id.clone(),
            plan_participant_id: self.plan.participants[slot].participant_id.clone(),
            audio_challenge,
        };
        let at = now_ms();
        self.log.lock().map_err(lock_err)?.append(&session_id, at, event)?;
        let session = Session {
            session_id: session_id.clone(),
            participant_id: req.participant_id.clone(),
            plan_participant_id: self.plan.participants[slot].participant_id.clone(),
            stage: Stage::Instructions,
            pages_done: 0,
            created_at_ms: at,
            updated_at_ms: at,
            audio_challenge,
            audio_attempts: 0,
            page_tokens: BTreeMap::new(),
            training_token: None,
        };
        let view = self.view(&session, false);
        reg.assigned[slot] = true;
        reg.created += 1;
        reg.by_participant.insert(req.participant_id.clone(), session_id.clone());
        reg.sessions.insert(session_id, Arc::new(Mutex::new(session)));
        Ok(view)
    }

    /// Moves past the instructions or training stage.
    pub fn advance(&self, session_id: &str) -> SvcResult<SessionView> {
        let handle = self.session_handle(session_id)?;
        let mut s = handle.lock().map_err(lock_err)?;
        let to = match s.stage {
            Stage::Instructions if self.plan.study_kind == StudyKind::InterlocApprop => Stage::AudioCheck,
            Stage::Instructions => Stage::Training,
            Stage::Training => Stage::Pages,
            other => {
                return Err(ServiceError::Conflict(format!("cannot advance from stage {other:?}")));
            }
        };
        self.commit(&mut s, Event::StageAdvanced { to })?;
        Ok(self.view(&s, false))
    }

    pub fn audio_check(&self, session_id: &str, answer: &AudioCheckAnswer) -> SvcResult<AudioCheckResult> {
        let handle = self.session_handle(session_id)?;
        let mut s = handle.lock().map_err(lock_err)?;
        if s.stage != Stage::AudioCheck {
            return Err(ServiceError::Conflict(format!("no audio check in stage {:?}", s.stage)));
        }
        let challenge = s
            .audio_challenge
            .ok_or_else(|| ServiceError::Internal("audio check without challenge".into()))?;
        let passed = answer.heard_side == challenge;
        let next_challenge = if passed {
            None
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                derive_seed(self.config.seed, s.audio_attempts as u64 + 1),
                s.created_at_ms,
            ));
            Some(if rng.random_bool(0.5) { Side::Left } else { Side::Right })
        };
        self.commit(
            &mut s,
            Event::AudioCheck {
                heard: answer.heard_side,
                passed,
                next_challenge,
            },
        )?;
        Ok(AudioCheckResult {
            passed,
            attempts: s.audio_attempts,
            stage: s.stage,
        })
    }

    pub fn current_view(&self, session_id: &str) -> SvcResult<StageView> {
        let s = self.session(session_id)?;
        let pp = self.participant_plan(&s)?;
        Ok(match s.stage {
            Stage::Instructions => StageView::Instructions { text: instructions(self.plan.study_kind).into() },
            Stage::AudioCheck => StageView::AudioCheck {
                tone_url: format!("/media/tone-{}-{}", s.session_id, s.audio_attempts),
                attempts: s.audio_attempts,
            },
            Stage::Training => StageView::Training { page: self.page_content(pp, 1, true)? },
            Stage::Pages => {
                let page_index = s.pages_done + 1;
                StageView::Pages {
                    page_index,
                    total_pages: self.plan.pages_per_participant,
                    page: self.page_content(pp, page_index, false)?,
                }
            }
            Stage::Demographics => StageView::Demographics {
                fields: DEMOGRAPHIC_FIELDS.iter().map(|f| f.to_string()).collect(),
            },
            Stage::Done => StageView::Done,
        })
    }

    fn page_content(&self, pp: &ParticipantPlan, page_index: u32, training: bool) -> SvcResult<PageContent> {
        let page = pp
            .page(page_index)
            .ok_or_else(|| ServiceError::Internal(format!("page {page_index} missing from plan")))?;
        let kind = self.plan.study_kind;
        let mut slots: Vec<MediaSlot> = page
            .slots
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let check = (!training).then(|| pp.check_at(page_index, i as u32)).flatten();
                let media_url = match check {
                    // Checks replace the stimulus with an instruction video.
                    Some(c) if !kind.is_pairwise() => format!("/media/{}", check_key(&c.expected)),
                    _ => format!("/media/{}", self.media_keys[&a.stimulus_id]),
                };
                MediaSlot { slot: i as u32, media_url }
            })
            .collect();
        if kind.is_pairwise() {
            // Present left then right.
            let left_first = page.slots[0].side != Some(Side::Right);
            if !left_first {
                slots.reverse();
            }
            for (i, s) in slots.iter_mut().enumerate() {
                s.slot = i as u32;
            }
            if let Some(c) = (!training).then(|| pp.check_at(page_index, 0)).flatten() {
                for s in &mut slots {
                    s.media_url = format!("/media/{}", check_key(&c.expected));
                }
            }
        }
        let response = if kind.is_pairwise() {
            ResponseSchema::Preference { options: PreferenceOption::ALL.to_vec() }
        } else {
            ResponseSchema::Sliders { count: self.plan.slots_per_page, min: 0, max: 100 }
        };
        Ok(PageContent {
            question: question(kind).into(),
            audio_layout: kind.audio_layout(),
            slots,
            response,
        })
    }

    /// Where `/media/{key}` should redirect, relative to the media base.
    pub fn media_target(&self, key: &str) -> SvcResult<String> {
        if let Some(id) = self.media.get(key) {
            let spec = self
                .plan
                .stimulus(id)
                .ok_or_else(|| ServiceError::Internal(format!("stimulus {id} missing")))?;
            return Ok(spec.media_uri.clone());
        }
        if let Some(rest) = key.strip_prefix("check-") {
            return Ok(format!("attention/{rest}.mp4"));
        }
        if let Some(rest) = key.strip_prefix("tone-") {
            let (sid, attempt) = rest
                .rsplit_once('-')
                .ok_or_else(|| ServiceError::NotFound(format!("media {key}")))?;
            let s = self.session(sid)?;
            if attempt.parse::<u32>().ok() != Some(s.audio_attempts) {
                return Err(ServiceError::NotFound(format!("media {key}")));
            }
            let side = s
                .audio_challenge
                .ok_or_else(|| ServiceError::NotFound(format!("media {key}")))?;
            return Ok(format!("audio-check/tone_{}.wav", side_str(side)));
        }
        Err(ServiceError::NotFound(format!("media {key}")))
    }

    pub fn media_url(&self, key: &str) -> SvcResult<String> {
        let target = self.media_target(key)?;
        Ok(format!("{}/{}", self.config.media_base_url.trim_end_matches('/'), target))
    }

    pub fn submit(&self, session_id: &str, req: &SubmitResponses) -> SvcResult<SubmitAck> {
        let handle = self.session_handle(session_id)?;
        let mut s = handle.lock().map_err(lock_err)?;
        if req.token.is_empty() {
            return Err(ServiceError::Unprocessable("token must not be empty".into()));
        }
        let seen = s.training_token.as_deref() == Some(req.token.as_str())
            || s.page_tokens.values().any(|t| *t == req.token);
        if seen {
            return Ok(SubmitAck {
                accepted: 0,
                stage: s.stage,
                pages_done: s.pages_done,
                duplicate: true,
            });
        }
        let training = match s.stage {
            Stage::Training => true,
            Stage::Pages => false,
            other => return Err(ServiceError::Conflict(format!("responses not accepted in stage {other:?}"))),
        };
        let page_index = if training {
            if req.page_index.is_some_and(|p| p != 1) {
                return Err(ServiceError::Unprocessable("training page has index 1".into()));
            }
            1
        } else {
            let expected = s.pages_done + 1;
            match req.page_index {
                Some(p) if p == expected => p,
                Some(p) => {
                    return Err(ServiceError::Conflict(format!("page {p} submitted, page {expected} is current")));
                }
                None => return Err(ServiceError::Unprocessable("page_index is required".into())),
            }
        };
        let pp = self.participant_plan(&s)?;
        let raws = self.validate_body(req)?;
        let ts = req.timestamp_ms.unwrap_or_else(now_ms);
        let records = page_records(pp, page_index, &raws, ts, training)
            .map_err(|e| ServiceError::Unprocessable(e.to_string()))?;
        let accepted = records.len();
        self.commit(
            &mut s,
            Event::Responses {
                token: req.token.clone(),
                page_index: (!training).then_some(page_index),
                records,
            },
        )?;
        Ok(SubmitAck {
            accepted,
            stage: s.stage,
            pages_done: s.pages_done,
            duplicate: false,
        })
    }

    fn validate_body(&self, req: &SubmitResponses) -> SvcResult<Vec<RawResponse>> {
        if self.plan.study_kind.is_pairwise() {
            match (&req.sliders, req.preference) {
                (None, Some(p)) => Ok(vec![RawResponse::Preference(p)]),
                _ => Err(ServiceError::Unprocessable("expected exactly one `preference` answer".into())),
            }
        } else {
            match (&req.sliders, req.preference) {
                (Some(v), None) => {
                    if v.len() != self.plan.slots_per_page as usize {
                        return Err(ServiceError::Unprocessable(format!(
                            "expected {} slider values, got {}",
                            self.plan.slots_per_page,
                            v.len()
                        )));
                    }
                    if let Some(bad) = v.iter().find(|x| !(0..=100).contains(*x)) {
                        return Err(ServiceError::Unprocessable(format!("slider value {bad} outside 0..=100")));
                    }
                    Ok(v.iter().map(|&x| RawResponse::Slider(x)).collect())
                }
                _ => Err(ServiceError::Unprocessable("expected `sliders` values".into())),
            }
        }
    }

    pub fn submit_demographics(&self, session_id: &str, data: BTreeMap<String, String>) -> SvcResult<SessionView> {
        let handle = self.session_handle(session_id)?;
        let mut s = handle.lock().map_err(lock_err)?;
        if s.stage != Stage::Demographics {
            return Err(ServiceError::Conflict(format!("demographics not accepted in stage {:?}", s.stage)));
        }
        if let Some(k) = data.keys().find(|k| !DEMOGRAPHIC_FIELDS.contains(&k.as_str())) {
            return Err(ServiceError::Unprocessable(format!("unknown demographic field {k:?}")));
        }
        self.commit(&mut s, Event::Demographics { data })?;
        Ok(self.view(&s, false))
    }

    /// Demographics keyed by plan participant id, for ingest reports.
    pub fn demographics(&self) -> SvcResult<BTreeMap<String, BTreeMap<String, String>>> {
        let mut sid_to_plan = HashMap::new();
        for h in self.registry.read().map_err(lock_err)?.sessions.values() {
            let s = h.lock().map_err(lock_err)?;
            sid_to_plan.insert(s.session_id.clone(), s.plan_participant_id.clone());
        }
        let mut out = BTreeMap::new();
        for e in read_event_log(&self.events_path())? {
            if let Event::Demographics { data } = e.event {
                if let Some(p) = sid_to_plan.get(&e.session_id) {
                    out.insert(p.clone(), data);
                }
            }
        }
        Ok(out)
    }
}

fn apply(s: &mut Session, event: &Event, at_ms: u64, total_pages: u32) {
    s.updated_at_ms = at_ms;
    match event {
        Event::SessionCreated { .. } => {}
        Event::StageAdvanced { to } => s.stage = *to,
        Event::AudioCheck { passed, next_challenge, .. } => {
            s.audio_attempts += 1;
            if *passed {
                s.stage = Stage::Training;
            } else {
                s.audio_challenge = *next_challenge;
            }
        }
        Event::Responses { token, page_index, .. } => match page_index {
            None => {
                s.training_token = Some(token.clone());
                s.stage = Stage::Pages;
            }
            Some(p) => {
                s.page_tokens.insert(*p, token.clone());
                s.pages_done = s.pages_done.max(*p);
                if s.pages_done >= total_pages {
                    s.stage = Stage::Demographics;
                }
            }
        },
        Event::Demographics { .. } => s.stage = Stage::Done,
    }
}

/// Builds the response records for one submitted page. Pairwise pages
/// produce a single record that references the matched stimulus.
pub fn page_records(
    pp: &ParticipantPlan,
    page_index: u32,
    raws: &[RawResponse],
    timestamp_ms: u64,
    training: bool,
) -> crate::Result<Vec<ResponseRecord>> {
    let page = pp
        .page(page_index)
        .ok_or_else(|| crate::Error::invalid(format!("page {page_index} not in plan")))?;
    let pairwise = page.slots.iter().any(|s| s.side.is_some());
    let targets: Vec<&str> = if pairwise {
        let m = page
            .slots
            .iter()
            .find(|s| s.match_status == MatchStatus::Matched)
            .ok_or_else(|| crate::Error::invalid("pairwise page without matched stimulus"))?;
        vec![m.stimulus_id.as_str()]
    } else {
        page.slots.iter().map(|s| s.stimulus_id.as_str()).collect()
    };
    if targets.len() != raws.len() {
        return Err(crate::Error::invalid(format!("expected {} responses, got {}", targets.len(), raws.len())));
    }
    Ok(targets
        .iter()
        .zip(raws)
        .enumerate()
        .map(|(slot, (stim, raw))| {
            let check = (!training).then(|| pp.check_at(page_index, slot as u32)).flatten();
            ResponseRecord {
                participant_id: pp.participant_id.clone(),
                page_index,
                slot: slot as u32,
                stimulus_id: stim.to_string(),
                raw: *raw,
                timestamp_ms,
                is_attention_check: check.is_some(),
                attention_passed: check.map(|c| c.expected.accepts(raw)),
                training,
            }
        })
        .collect())
}

fn check_key(expected: &crate::design::ExpectedResponse) -> String {
    use crate::design::ExpectedResponse;
    match expected {
        ExpectedResponse::SliderExtreme { side } => format!("check-slider-{}", side_str(*side)),
        ExpectedResponse::Preference { option } => format!("check-pref-{}", option.as_str()),
    }
}

fn side_str(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
    }
}

fn question(kind: StudyKind) -> &'static str {
    match kind {
        StudyKind::Humanlikeness => "How human-like does the gesture motion appear?",
        StudyKind::SpeechApprop => "Which character's motion matches the speech better, both in rhythm and content?",
        StudyKind::InterlocApprop => "Which character's motion is more appropriate as a reaction to the conversation partner?",
    }
}

fn instructions(kind: StudyKind) -> &'static str {
    match kind {
        StudyKind::Humanlikeness => {
            "You will see pages of silent videos. Rate each video by how human-like its motion looks, ignoring the appearance of the character."
        }
        StudyKind::SpeechApprop => {
            "Each page shows two videos of the same character speaking. Choose which one moves in a way that better fits what is being said."
        }
        StudyKind::InterlocApprop => {
            "Each page shows two videos of a character listening or speaking to a partner you can hear in your left ear. Use headphones. Choose which character reacts more appropriately to the partner."
        }
    }
}
