//! Append-only pipeline event log and the record states replayed from it.
//!
//! The manifest is never rewritten; filter verdicts, triage enqueues and
//! safety verdicts are appended to `<stem>.events.jsonl` next to it.

use std::collections::{HashMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CorpusError, PipelineState, StateError, VideoRecord};
use crate::filterpipe::{self, FilterVerdict, SafetyVerdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum PipelineEvent {
    Filter(FilterVerdict),
    TriageEnqueue { video_id: String, at: DateTime<Utc> },
    Safety(SafetyVerdict),
}

impl PipelineEvent {
    pub fn video_id(&self) -> &str {
        match self {
            PipelineEvent::Filter(v) => &v.video_id,
            PipelineEvent::TriageEnqueue { video_id, .. } => video_id,
            PipelineEvent::Safety(v) => &v.video_id,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("unknown video id {0:?}")]
    UnknownId(String),
}

impl StoreError {
    pub fn category(&self) -> &'static str {
        match self {
            StoreError::Corpus(e) => e.category(),
            StoreError::State(_) => "state",
            StoreError::UnknownId(_) => "not_found",
        }
    }
}

pub fn event_log_path(manifest: &Path) -> PathBuf {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    manifest.with_file_name(format!("{stem}.events.jsonl"))
}

/// Single-writer append handle.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl EventLog {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| CorpusError::io(&path, e))?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, event: &PipelineEvent) -> Result<(), CorpusError> {
        let mut line = serde_json::to_string(event).expect("event serializes");
        line.push('\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(line.as_bytes())
            .and_then(|_| file.sync_data())
            .map_err(|e| CorpusError::io(&self.path, e))
    }

    /// Reads every event; a missing file is an empty log.
    pub fn replay(path: &Path) -> Result<Vec<PipelineEvent>, CorpusError> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(CorpusError::io(path, e)),
        };
        let mut events = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| CorpusError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(events)
    }
}

/// In-memory record states plus the audit trail that produced them.
#[derive(Debug, Clone, Default)]
pub struct CorpusState {
    records: Vec<VideoRecord>,
    index: HashMap<String, usize>,
    queue: VecDeque<String>,
    filter_verdicts: HashMap<String, FilterVerdict>,
    safety_verdicts: HashMap<String, SafetyVerdict>,
}

impl CorpusState {
    pub fn new(records: Vec<VideoRecord>) -> Self {
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        Self {
            records,
            index,
            ..Default::default()
        }
    }

    pub fn replayed(records: Vec<VideoRecord>, events: &[PipelineEvent]) -> Result<Self, StoreError> {
        let mut state = Self::new(records);
        for e in events {
            state.apply(e)?;
        }
        Ok(state)
    }

    pub fn records(&self) -> &[VideoRecord] {
        &self.records
    }

    pub fn record(&self, id: &str) -> Option<&VideoRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn filter_verdict(&self, id: &str) -> Option<&FilterVerdict> {
        self.filter_verdicts.get(id)
    }

    pub fn safety_verdict(&self, id: &str) -> Option<&SafetyVerdict> {
        self.safety_verdicts.get(id)
    }

    /// Pending triage ids, oldest first.
    pub fn pending(&self) -> impl Iterator<Item = &str> {
        self.queue.iter().map(String::as_str)
    }

    pub fn pending_count(&self) -> usize {
        self.queue.len()
    }

    pub fn reviewed_count(&self) -> usize {
        self.records.iter().filter(|r| r.state.is_reviewed()).count()
    }

    fn record_mut(&mut self, id: &str) -> Result<&mut VideoRecord, StoreError> {
        match self.index.get(id) {
            Some(&i) => Ok(&mut self.records[i]),
            None => Err(StoreError::UnknownId(id.to_string())),
        }
    }

    /// Applies one event; the state is unchanged on error.
    pub fn apply(&mut self, event: &PipelineEvent) -> Result<PipelineState, StoreError> {
        let id = event.video_id().to_string();
        let record = self.record_mut(&id)?;
        let new_state = match event {
            PipelineEvent::Filter(v) => filterpipe::apply_filter_verdict(record, v)?,
            PipelineEvent::TriageEnqueue { .. } => filterpipe::triage_enqueue(record)?,
            PipelineEvent::Safety(v) => filterpipe::triage_record(record, v)?,
        };
        match event {
            PipelineEvent::Filter(v) => {
                self.filter_verdicts.insert(id, v.clone());
            }
            PipelineEvent::TriageEnqueue { .. } => self.queue.push_back(id),
            PipelineEvent::Safety(v) => {
                self.queue.retain(|q| *q != id);
                self.safety_verdicts.insert(id, v.clone());
            }
        }
        Ok(new_state)
    }

    /// Validates the event against the current state, appends it to the log
    /// and applies it. Nothing is written when the transition is invalid.
    pub fn commit(&mut self, log: &EventLog, event: PipelineEvent) -> Result<PipelineState, StoreError> {
        let mut probe = self
            .record(event.video_id())
            .cloned()
            .ok_or_else(|| StoreError::UnknownId(event.video_id().to_string()))?;
        match &event {
            PipelineEvent::Filter(v) => filterpipe::apply_filter_verdict(&mut probe, v)?,
            PipelineEvent::TriageEnqueue { .. } => filterpipe::triage_enqueue(&mut probe)?,
            PipelineEvent::Safety(v) => filterpipe::triage_record(&mut probe, v)?,
        };
        log.append(&event)?;
        self.apply(&event)
    }
}
