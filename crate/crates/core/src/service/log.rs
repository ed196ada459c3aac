//! Append-only newline-JSON event log (`subjeval/events-v1`) and snapshots.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Session, Stage};
use crate::design::Side;
use crate::ingest::ResponseRecord;
use crate::{Error, Result};

pub const EVENTS_SCHEMA: &str = "subjeval/events-v1";
pub const SNAPSHOT_SCHEMA: &str = "subjeval/snapshot-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        participant_id: String,
        plan_participant_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        audio_challenge: Option<Side>,
    },
    StageAdvanced {
        to: Stage,
    },
    AudioCheck {
        heard: Side,
        passed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        next_challenge: Option<Side>,
    },
    Responses {
        token: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        page_index: Option<u32>,
        records: Vec<ResponseRecord>,
    },
    Demographics {
        data: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    pub at_ms: u64,
    pub session_id: String,
    pub event: Event,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
}

pub struct EventLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
    sync: bool,
}

impl EventLog {
    /// Opens (creating if needed) the log at `path` and returns the events
    /// already stored in it.
    pub fn open(path: &Path, sync: bool) -> Result<(EventLog, Vec<LoggedEvent>)> {
        let existing = if path.exists() { read_event_log(path)? } else { Vec::new() };
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            serde_json::to_writer(&mut file, &Header { schema: EVENTS_SCHEMA.into() })?;
            file.write_all(b"\n")?;
        }
        let next_seq = existing.last().map_or(1, |e| e.seq + 1);
        Ok((
            EventLog {
                path: path.to_path_buf(),
                file,
                next_seq,
                sync,
            },
            existing,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_seq(&self) -> u64 {
        self.next_seq - 1
    }

    /// Writes one event as a single line; returns once the bytes have reached
    /// the operating system (and the disk, when syncing is enabled).
    pub fn append(&mut self, session_id: &str, at_ms: u64, event: Event) -> Result<LoggedEvent> {
        let logged = LoggedEvent {
            seq: self.next_seq,
            at_ms,
            session_id: session_id.to_string(),
            event,
        };
        let mut line = serde_json::to_vec(&logged)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        if self.sync {
            self.file.sync_data()?;
        }
        self.next_seq += 1;
        Ok(logged)
    }
}

pub fn read_event_log(path: &Path) -> Result<Vec<LoggedEvent>> {
    let source = path.display().to_string();
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        let ctx = || format!("{source}:{}", i + 1);
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let h: Header = serde_json::from_str(&line).map_err(|e| Error::schema(ctx(), e.to_string()))?;
            if h.schema != EVENTS_SCHEMA {
                return Err(Error::schema(ctx(), format!("expected schema {EVENTS_SCHEMA:?}, found {:?}", h.schema)));
            }
            header_seen = true;
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::schema(ctx(), e.to_string()))?);
    }
    Ok(out)
}

/// All response records stored in an event log, in log order. Training
/// responses are included with their `training` flag set.
pub fn responses_from_log(path: &Path) -> Result<Vec<ResponseRecord>> {
    Ok(read_event_log(path)?
        .into_iter()
        .filter_map(|e| match e.event {
            Event::Responses { records, .. } => Some(records),
            _ => None,
        })
        .flatten()
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema: String,
    pub last_seq: u64,
    pub sessions: Vec<Session>,
}

impl Snapshot {
    pub fn load(path: &Path) -> Result<Option<Snapshot>> {
        if !path.exists() {
            return Ok(None);
        }
        let snap: Snapshot = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if snap.schema != SNAPSHOT_SCHEMA {
            return Err(Error::schema(path.display().to_string(), format!("expected schema {SNAPSHOT_SCHEMA:?}")));
        }
        Ok(Some(snap))
    }

    /// Writes to a temporary file and renames it into place.
    pub fn store(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}
