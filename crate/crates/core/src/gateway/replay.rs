//! Append-only store of recorded responses.
//!
//! One JSON object per line:
//! `{"version":1,"bundle_id":..,"config":..,"sample_index":..,"response":..}`.
//! A key may appear at most once.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{GatewayError, GenerationBatch, Provider};
use crate::bundle::BugBundle;
use crate::prompt::{PromptBundle, PromptConfig};

pub const REPLAY_FORMAT_VERSION: u32 = 1;

static WRITE_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub version: u32,
    pub bundle_id: String,
    pub config: PromptConfig,
    pub sample_index: usize,
    pub response: String,
}

type Key = (String, PromptConfig, usize);

#[derive(Debug, Clone, Default)]
pub struct ReplayStore {
    path: PathBuf,
    entries: BTreeMap<Key, String>,
}

fn io_failure(path: &Path, message: impl ToString) -> GatewayError {
    GatewayError::IOFailure {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn read_entries(path: &Path) -> Result<BTreeMap<Key, String>, GatewayError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(io_failure(path, e)),
    };
    let mut entries = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ReplayEntry =
            serde_json::from_str(line).map_err(|e| io_failure(path, format!("line {}: {e}", n + 1)))?;
        if entry.version != REPLAY_FORMAT_VERSION {
            return Err(io_failure(
                path,
                format!("line {}: unsupported replay format version {}", n + 1, entry.version),
            ));
        }
        let key = (entry.bundle_id, entry.config, entry.sample_index);
        if entries.contains_key(&key) {
            return Err(GatewayError::DuplicateKey {
                bundle_id: key.0,
                config: key.1,
                sample_index: key.2,
            });
        }
        entries.insert(key, entry.response);
    }
    Ok(entries)
}

impl ReplayStore {
    /// Loads the store at `path`; a missing file is an empty store.
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        Ok(Self {
            path: path.to_path_buf(),
            entries: read_entries(path)?,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, bundle_id: &str, config: PromptConfig, sample_index: usize) -> Option<&str> {
        self.entries
            .get(&(bundle_id.to_string(), config, sample_index))
            .map(String::as_str)
    }
}

impl Provider for ReplayStore {
    fn fingerprint(&self) -> String {
        format!("replay:v{REPLAY_FORMAT_VERSION}")
    }

    fn complete(
        &self,
        prompt: &PromptBundle,
        _bundle: &BugBundle,
        sample_index: usize,
    ) -> Result<String, GatewayError> {
        self.get(&prompt.bundle_id, prompt.config, sample_index)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::ReplayMiss {
                bundle_id: prompt.bundle_id.clone(),
                config: prompt.config,
                sample_index,
            })
    }
}

/// Appends every sample of `batch` to the store at `replay_path`.
///
/// Nothing is written if any of the batch's keys is already present.
pub fn record_replay(batch: &GenerationBatch, replay_path: &Path) -> Result<(), GatewayError> {
    let _guard = WRITE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let existing = read_entries(replay_path)?;
    let bundle_id = &batch.prompt.bundle_id;
    let config = batch.prompt.config;
    for i in 0..batch.samples.len() {
        if existing.contains_key(&(bundle_id.clone(), config, i)) {
            return Err(GatewayError::DuplicateKey {
                bundle_id: bundle_id.clone(),
                config,
                sample_index: i,
            });
        }
    }
    let mut text = String::new();
    for (i, response) in batch.samples.iter().enumerate() {
        let entry = ReplayEntry {
            version: REPLAY_FORMAT_VERSION,
            bundle_id: bundle_id.clone(),
            config,
            sample_index: i,
            response: response.clone(),
        };
        text.push_str(&serde_json::to_string(&entry).map_err(|e| io_failure(replay_path, e))?);
        text.push('\n');
    }
    if let Some(parent) = replay_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(replay_path)
        .map_err(|e| io_failure(replay_path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_failure(replay_path, e))
}
