//! Corpus data model, manifest ingestion, validation, statistics, splits and
//! the append-only pipeline event log.

mod manifest;
mod split;
mod state;
mod stats;
pub mod store;
mod validate;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use manifest::{ingest_manifest, parse_manifest, read_manifest, write_manifest};
pub use split::{
    make_kfold_splits, make_tvt_split, split_file_path, FoldRotation, Partition, SplitAssignment,
    SplitLabel, SplitScheme,
};
pub use state::{FilterStage, PipelineState, SafetyCriterion, StateError};
pub use stats::{corpus_stats, StatsReport};
pub use store::{event_log_path, CorpusState, EventLog, PipelineEvent, StoreError};
pub use validate::{
    duration_warning, lint_explanation_format, validate_annotations, Violation, ViolationKind,
    DEFAULT_DURATION_CAP_S, MAX_MOMENTS,
};

/// Paths to the on-disk media of one video. Relative paths resolve against
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MediaBundleRef {
    pub frames_dir: PathBuf,
    pub audio: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<PathBuf>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl MediaBundleRef {
    /// Returns a copy with relative paths joined onto `root`.
    pub fn resolved(&self, root: &std::path::Path) -> MediaBundleRef {
        let join = |p: &PathBuf| {
            if p.is_absolute() {
                p.clone()
            } else {
                root.join(p)
            }
        };
        MediaBundleRef {
            frames_dir: join(&self.frames_dir),
            audio: join(&self.audio),
            transcript: self.transcript.as_ref().map(join),
            extra: self.extra.clone(),
        }
    }
}

/// An annotated funny moment with its explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnyMoment {
    pub start_s: f64,
    pub end_s: f64,
    pub explanation: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl FunnyMoment {
    pub fn new(start_s: f64, end_s: f64, explanation: impl Into<String>) -> Self {
        Self {
            start_s,
            end_s,
            explanation: explanation.into(),
            extra: BTreeMap::new(),
        }
    }
}

/// One corpus entry. `state` is not part of the manifest line; it is
/// reconstructed from the event log (see [`store`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    pub source_url: String,
    pub duration_s: f64,
    pub media: MediaBundleRef,
    #[serde(default)]
    pub annotations: Vec<FunnyMoment>,
    #[serde(skip)]
    pub state: PipelineState,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl VideoRecord {
    pub fn new(id: impl Into<String>, duration_s: f64) -> Self {
        let id = id.into();
        Self {
            source_url: String::new(),
            duration_s,
            media: MediaBundleRef {
                frames_dir: PathBuf::from(format!("{id}/frames")),
                audio: PathBuf::from(format!("{id}/audio.wav")),
                transcript: None,
                extra: BTreeMap::new(),
            },
            annotations: Vec::new(),
            state: PipelineState::Ingested,
            extra: BTreeMap::new(),
            id,
        }
    }

    pub fn with_moment(mut self, start_s: f64, end_s: f64, explanation: &str) -> Self {
        self.annotations
            .push(FunnyMoment::new(start_s, end_s, explanation));
        self
    }
}

/// A timestamped utterance, optionally labeled with a speaker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
}

impl Utterance {
    pub fn new(start_s: f64, end_s: f64, text: impl Into<String>) -> Self {
        Self {
            start_s,
            end_s,
            text: text.into(),
            speaker: None,
        }
    }
}

/// Speech transcript. Utterances are sorted by start time but may overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub language: String,
    #[serde(default)]
    pub utterances: Vec<Utterance>,
}

impl Transcript {
    pub fn new(language: impl Into<String>, mut utterances: Vec<Utterance>) -> Self {
        utterances.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        Self {
            language: language.into(),
            utterances,
        }
    }

    /// The transcript an ASR backend reports for silent audio.
    pub fn silent() -> Self {
        Self {
            language: "und".into(),
            utterances: Vec::new(),
        }
    }

    pub fn is_english(&self) -> bool {
        let primary = self.language.split(['-', '_']).next().unwrap_or("");
        primary.eq_ignore_ascii_case("en")
    }

    /// Checks the utterance invariants; returns a description of the first
    /// offending utterance.
    pub fn check(&self) -> Result<(), String> {
        for (i, u) in self.utterances.iter().enumerate() {
            if !(u.start_s < u.end_s) {
                return Err(format!("utterance {i}: start {} >= end {}", u.start_s, u.end_s));
            }
            if u.text.trim().is_empty() {
                return Err(format!("utterance {i}: empty text"));
            }
        }
        if self
            .utterances
            .windows(2)
            .any(|w| w[1].start_s < w[0].start_s)
        {
            return Err("utterances not sorted by start time".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?} (first seen on line {first_line})")]
    DuplicateId {
        id: String,
        first_line: usize,
        line: usize,
    },
    #[error("record {id:?} failed validation: {}", format_violations(.violations))]
    Validation { id: String, violations: Vec<Violation> },
    #[error("{0}")]
    Argument(String),
}

impl CorpusError {
    pub fn category(&self) -> &'static str {
        match self {
            CorpusError::Io { .. } => "io",
            CorpusError::Parse { .. } => "parse",
            CorpusError::DuplicateId { .. } => "conflict",
            CorpusError::Validation { .. } => "validation",
            CorpusError::Argument(_) => "argument",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.kind.code())
        .collect::<Vec<_>>()
        .join(", ")
}
