use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{PipelineState, SafetyCriterion, StateError, VideoRecord};

use super::{FilterDecision, FilterVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyDecision {
    Keep,
    Remove,
}

impl SafetyDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            SafetyDecision::Keep => "keep",
            SafetyDecision::Remove => "remove",
        }
    }
}

impl std::str::FromStr for SafetyDecision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keep" => Ok(SafetyDecision::Keep),
            "remove" => Ok(SafetyDecision::Remove),
            other => Err(format!("unknown safety decision {other:?} (expected keep or remove)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid safety verdict for {video_id:?}: {message}")]
pub struct VerdictError {
    pub video_id: String,
    pub message: String,
}

/// A reviewer's keep/remove decision. `Remove` carries exactly one criterion
/// and `Keep` carries none; deserialization enforces the same rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSafetyVerdict")]
pub struct SafetyVerdict {
    pub video_id: String,
    pub decision: SafetyDecision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<SafetyCriterion>,
    pub reviewer: String,
    pub at: DateTime<Utc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub watch_complete: Option<bool>,
}

#[derive(Deserialize)]
struct RawSafetyVerdict {
    video_id: String,
    decision: SafetyDecision,
    #[serde(default)]
    criterion: Option<SafetyCriterion>,
    reviewer: String,
    at: DateTime<Utc>,
    #[serde(default)]
    watch_complete: Option<bool>,
}

impl TryFrom<RawSafetyVerdict> for SafetyVerdict {
    type Error = VerdictError;

    fn try_from(r: RawSafetyVerdict) -> Result<Self, Self::Error> {
        let mut v = SafetyVerdict::new(r.video_id, r.decision, r.criterion, r.reviewer)?;
        v.at = r.at;
        v.watch_complete = r.watch_complete;
        Ok(v)
    }
}

impl SafetyVerdict {
    pub fn new(
        video_id: impl Into<String>,
        decision: SafetyDecision,
        criterion: Option<SafetyCriterion>,
        reviewer: impl Into<String>,
    ) -> Result<Self, VerdictError> {
        let video_id = video_id.into();
        let reviewer = reviewer.into();
        let fail = |message: &str| VerdictError {
            video_id: video_id.clone(),
            message: message.into(),
        };
        match (decision, criterion) {
            (SafetyDecision::Remove, None) => return Err(fail("remove requires a criterion")),
            (SafetyDecision::Keep, Some(_)) => return Err(fail("keep must not carry a criterion")),
            _ => {}
        }
        if reviewer.trim().is_empty() {
            return Err(fail("reviewer must be non-empty"));
        }
        Ok(Self {
            video_id,
            decision,
            criterion,
            reviewer,
            at: Utc::now(),
            watch_complete: None,
        })
    }

    pub fn with_watch_complete(mut self, watched: bool) -> Self {
        self.watch_complete = Some(watched);
        self
    }

    pub fn target_state(&self) -> PipelineState {
        match self.criterion {
            Some(criterion) => PipelineState::TriageRejected { criterion },
            None => PipelineState::Published,
        }
    }
}

fn advance(record: &mut VideoRecord, next: PipelineState) -> Result<PipelineState, StateError> {
    record.state = record.state.transition(&record.id, next)?;
    Ok(record.state)
}

/// `ingested -> filter_accepted | filtered_rejected(stage)`.
pub fn apply_filter_verdict(record: &mut VideoRecord, verdict: &FilterVerdict) -> Result<PipelineState, StateError> {
    let next = match verdict.decision {
        FilterDecision::Accept => PipelineState::FilterAccepted,
        FilterDecision::Reject => PipelineState::FilteredRejected { stage: verdict.stage },
    };
    advance(record, next)
}

/// `filter_accepted -> triage_pending`.
pub fn triage_enqueue(record: &mut VideoRecord) -> Result<PipelineState, StateError> {
    advance(record, PipelineState::TriagePending)
}

/// `triage_pending -> published | triage_rejected(criterion)`. A second
/// verdict for the same record fails because the record has left
/// `triage_pending`.
pub fn triage_record(record: &mut VideoRecord, verdict: &SafetyVerdict) -> Result<PipelineState, StateError> {
    advance(record, verdict.target_state())
}
