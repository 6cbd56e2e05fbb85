//! Multimodal filtering (steps a to d) and the manual safety-triage state
//! machine.

mod parse;
mod templates;
mod triage;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::backends::{BackendError, Client, CompletionRequest, MediaRef};
use crate::corpus::{FilterStage, StateError, Transcript, VideoRecord};
use crate::corpus::PipelineState;

pub use parse::{match_funny_utterance, normalize_text};
pub use templates::{fill, render_transcript, FilterTemplates};
pub use triage::{
    apply_filter_verdict, triage_enqueue, triage_record, SafetyDecision, SafetyVerdict, VerdictError,
};

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 0.6;
pub const DEFAULT_VIDEO_CAPTION_PROMPT: &str = "Describe what happens in this video.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterDecision {
    Accept,
    Reject,
}

impl FilterDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterDecision::Accept => "accept",
            FilterDecision::Reject => "reject",
        }
    }
}

/// Outcome of the filtering pipeline for one video. Accepts come only from
/// stage c or d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub video_id: String,
    pub decision: FilterDecision,
    pub stage: FilterStage,
    pub detail: String,
}

impl FilterVerdict {
    pub fn accept(video_id: impl Into<String>, stage: FilterStage, detail: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            decision: FilterDecision::Accept,
            stage,
            detail: detail.into(),
        }
    }

    pub fn reject(video_id: impl Into<String>, stage: FilterStage, detail: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            decision: FilterDecision::Reject,
            stage,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for FilterVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}({}): {}", self.video_id, self.decision.as_str(), self.stage.letter(), self.detail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("media error for {id:?}: {message}")]
    Media { id: String, message: String },
    #[error(transparent)]
    State(#[from] StateError),
}

impl FilterError {
    /// Backend and media failures leave the record untouched so a later run
    /// can retry it.
    pub fn is_retryable(&self) -> bool {
        !matches!(self, FilterError::State(_))
    }

    pub fn category(&self) -> &'static str {
        match self {
            FilterError::Backend(e) => e.category(),
            FilterError::Media { .. } => "media",
            FilterError::State(_) => "conflict",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub divergence_threshold: f64,
    pub templates: FilterTemplates,
    pub video_caption_prompt: String,
    /// Base directory for relative media paths.
    pub media_root: PathBuf,
    /// Named completion endpoint; `None` uses the default one.
    pub completion_endpoint: Option<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            templates: FilterTemplates::default(),
            video_caption_prompt: DEFAULT_VIDEO_CAPTION_PROMPT.into(),
            media_root: PathBuf::from("."),
            completion_endpoint: None,
        }
    }
}

/// Artifacts produced by step a.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaArtifacts {
    pub caption: String,
    pub transcript: Transcript,
}

/// Either the pipeline continues with a value or a verdict ends it.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate<T> {
    Pass(T),
    Stop(FilterVerdict),
}

/// Precomputed transcript when the bundle has one, otherwise ASR.
pub fn obtain_transcript(record: &VideoRecord, media_root: &Path, client: &Client) -> Result<Transcript, FilterError> {
    let media = record.media.resolved(media_root);
    match &media.transcript {
        Some(path) => {
            let media_err = |message: String| FilterError::Media {
                id: record.id.clone(),
                message,
            };
            let text = std::fs::read_to_string(path).map_err(|e| media_err(format!("{}: {e}", path.display())))?;
            let t: Transcript =
                serde_json::from_str(&text).map_err(|e| media_err(format!("{}: {e}", path.display())))?;
            let t = Transcript::new(t.language, t.utterances);
            t.check().map_err(media_err)?;
            Ok(t)
        }
        None => Ok(client.asr(&MediaRef::new(&record.id).with_path(media.audio))?),
    }
}

/// Step a: transcript and whole-video caption. Silent or non-English videos
/// are rejected before any caption call.
pub fn step_a_media(record: &VideoRecord, client: &Client, cfg: &FilterConfig) -> Result<Gate<MediaArtifacts>, FilterError> {
    let transcript = obtain_transcript(record, &cfg.media_root, client)?;
    if transcript.utterances.is_empty() {
        return Ok(Gate::Stop(FilterVerdict::reject(&record.id, FilterStage::AMedia, "no speech")));
    }
    if !transcript.is_english() {
        return Ok(Gate::Stop(FilterVerdict::reject(
            &record.id,
            FilterStage::AMedia,
            format!("non-English ({})", transcript.language),
        )));
    }
    let frames = record.media.resolved(&cfg.media_root).frames_dir;
    let video = MediaRef::new(&record.id).with_path(frames);
    let caption = client
        .caption_frames(std::slice::from_ref(&video), &cfg.video_caption_prompt, 1)?
        .into_iter()
        .next()
        .and_then(|c| c.into_iter().next())
        .unwrap_or_default();
    Ok(Gate::Pass(MediaArtifacts { caption, transcript }))
}

fn detect(prompt: String, transcript: &Transcript, client: &Client, cfg: &FilterConfig, step: char) -> Result<Option<usize>, FilterError> {
    let reply = client.complete_on(cfg.completion_endpoint.as_deref(), &CompletionRequest::detection(prompt))?;
    let found = match_funny_utterance(&reply, transcript);
    if found.is_none() && !normalize_text(&reply).starts_with("none") {
        warn!(step = %step, reply = %reply, "completion reply matched no utterance; treating as none found");
    }
    Ok(found)
}

/// Step b: funny-utterance detection given caption and transcript. Returns
/// the index of the identified utterance.
pub fn step_b_funny_with_caption(caption: &str, transcript: &Transcript, client: &Client, cfg: &FilterConfig) -> Result<Option<usize>, FilterError> {
    detect(fill(&cfg.templates.step_b, Some(caption), transcript), transcript, client, cfg, 'b')
}

/// Step c: the same query from the transcript alone.
pub fn step_c_transcript_only(transcript: &Transcript, client: &Client, cfg: &FilterConfig) -> Result<Option<usize>, FilterError> {
    detect(fill(&cfg.templates.step_c, None, transcript), transcript, client, cfg, 'c')
}

/// Cosine similarity of the explanations generated with and without the
/// caption.
pub fn explanation_similarity(caption: &str, transcript: &Transcript, client: &Client, cfg: &FilterConfig) -> Result<f64, FilterError> {
    let ask = |template: &str, caption: Option<&str>| {
        let req = CompletionRequest::explanation(fill(template, caption, transcript), 1);
        client.complete_on(cfg.completion_endpoint.as_deref(), &req)
    };
    let with_caption = ask(&cfg.templates.step_d_with_caption, Some(caption))?;
    let transcript_only = ask(&cfg.templates.step_d_transcript_only, None)?;
    let vectors = client.embed(&[with_caption, transcript_only])?;
    crate::evalkit::cosine(&vectors[0], &vectors[1])
        .map_err(|e| BackendError::Protocol(format!("embed: {e}")).into())
}

/// Step d: rejects only when the similarity is strictly above `threshold`.
pub fn step_d_divergence(
    video_id: &str,
    caption: &str,
    transcript: &Transcript,
    threshold: f64,
    client: &Client,
    cfg: &FilterConfig,
) -> Result<FilterVerdict, FilterError> {
    let sim = explanation_similarity(caption, transcript, client, cfg)?;
    let detail = format!("similarity={sim:.4} threshold={threshold}");
    Ok(if sim > threshold {
        FilterVerdict::reject(video_id, FilterStage::DDivergence, detail)
    } else {
        FilterVerdict::accept(video_id, FilterStage::DDivergence, detail)
    })
}

/// Result of running the pipeline, possibly stopped early by a stage limit.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterOutcome {
    Verdict(FilterVerdict),
    /// Every stage up to and including `stage` passed without a verdict.
    Undecided { video_id: String, stage: FilterStage },
}

impl FilterOutcome {
    pub fn verdict(&self) -> Option<&FilterVerdict> {
        match self {
            FilterOutcome::Verdict(v) => Some(v),
            FilterOutcome::Undecided { .. } => None,
        }
    }
}

/// Runs steps a through `limit` without touching the record.
pub fn evaluate_filter(record: &VideoRecord, client: &Client, cfg: &FilterConfig, limit: FilterStage) -> Result<FilterOutcome, FilterError> {
    let id = record.id.as_str();
    let undecided = |stage| {
        Ok(FilterOutcome::Undecided {
            video_id: id.to_string(),
            stage,
        })
    };
    let artifacts = match step_a_media(record, client, cfg)? {
        Gate::Stop(v) => return Ok(FilterOutcome::Verdict(v)),
        Gate::Pass(a) => a,
    };
    if limit == FilterStage::AMedia {
        return undecided(FilterStage::AMedia);
    }
    let MediaArtifacts { caption, transcript } = artifacts;
    let Some(found) = step_b_funny_with_caption(&caption, &transcript, client, cfg)? else {
        return Ok(FilterOutcome::Verdict(FilterVerdict::reject(
            id,
            FilterStage::BFunnyWithCaption,
            "no funny utterance with caption",
        )));
    };
    if limit == FilterStage::BFunnyWithCaption {
        return undecided(FilterStage::BFunnyWithCaption);
    }
    if step_c_transcript_only(&transcript, client, cfg)?.is_none() {
        let text = transcript.utterances[found].text.trim();
        return Ok(FilterOutcome::Verdict(FilterVerdict::accept(
            id,
            FilterStage::CTranscriptOnly,
            format!("multimodal; funny utterance #{}: {text:?}", found + 1),
        )));
    }
    if limit == FilterStage::CTranscriptOnly {
        return undecided(FilterStage::CTranscriptOnly);
    }
    step_d_divergence(id, &caption, &transcript, cfg.divergence_threshold, client, cfg).map(FilterOutcome::Verdict)
}

/// Full pipeline. On a verdict the record moves out of `ingested`; on any
/// error it is left as it was.
pub fn run_filter(record: &mut VideoRecord, client: &Client, cfg: &FilterConfig) -> Result<FilterVerdict, FilterError> {
    if record.state != PipelineState::Ingested {
        return Err(StateError {
            id: record.id.clone(),
            from: record.state,
            to: PipelineState::FilterAccepted,
        }
        .into());
    }
    let outcome = evaluate_filter(record, client, cfg, FilterStage::DDivergence)?;
    let FilterOutcome::Verdict(verdict) = outcome else {
        unreachable!("stage d always yields a verdict")
    };
    apply_filter_verdict(record, &verdict)?;
    Ok(verdict)
}
