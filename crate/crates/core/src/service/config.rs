use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub plan: PathBuf,
    /// Defaults to the plan's study kind.
    pub study_id: Option<String>,
    pub media_base_url: String,
    /// Seed for session ids and audio-check tones.
    pub seed: u64,
    /// fsync every appended event before acknowledging.
    pub sync_writes: bool,
    /// Seconds between snapshots; 0 disables them.
    pub snapshot_interval_s: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("data"),
            plan: PathBuf::from("plan.json"),
            study_id: None,
            media_base_url: "/static".into(),
            seed: 0,
            sync_writes: true,
            snapshot_interval_s: 300,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::schema("service config", e.to_string()))
    }

    /// Reads `path` (if given) and applies `SUBJEVAL_*` environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::schema(p.display().to_string(), e.to_string()))?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = get("SUBJEVAL_PORT") {
            self.port = v
                .parse()
                .map_err(|_| Error::invalid(format!("SUBJEVAL_PORT={v:?} is not a port number")))?;
        }
        if let Some(v) = get("SUBJEVAL_BIND") {
            self.bind = v;
        }
        if let Some(v) = get("SUBJEVAL_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = get("SUBJEVAL_PLAN") {
            self.plan = v.into();
        }
        if let Some(v) = get("SUBJEVAL_MEDIA_BASE") {
            self.media_base_url = v;
        }
        Ok(())
    }

    pub fn events_path(&self) -> PathBuf {
        self.data_dir.join("events.ndjson")
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.data_dir.join("snapshot.json")
    }
}
