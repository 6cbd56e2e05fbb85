//! Clients for the external models (speech recognition, captioning,
//! retrieval, audio tagging, embedding, completion, moment localization)
//! behind one JSON wire protocol, plus deterministic scripted replay.
//!
//! The [`Client`] normalizes every response before it reaches callers:
//! embeddings are unit-norm, audio tags are sorted by confidence, retrieval
//! ties resolve to the lowest index and localization results are sorted and
//! truncated.

mod localizer;
pub mod scripted;
mod transport;
pub mod wire;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::Transcript;

pub use localizer::{FallbackLocalizer, SceneCaption};
pub use scripted::{hashed_bow_embedding, prompt_key, CompleteRule, EmbedFallback, LocalizeRule, ScriptFixture, ScriptedTransport};
pub use transport::{unwrap_envelope, Endpoint, EndpointConfig, HttpTransport, RetryPolicy, Transport};

/// Temperature for funny-utterance detection calls.
pub const DETECTION_TEMPERATURE: f64 = 0.0;
/// Temperature for explanation generation calls.
pub const EXPLANATION_TEMPERATURE: f64 = 0.3;
/// Temperature for the speaker-separation chat call.
pub const SPEAKER_TEMPERATURE: f64 = 0.3;
/// Number of localization candidates kept for rationale scoring.
pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Asr,
    Caption,
    Retrieve,
    Audiotag,
    Embed,
    Complete,
    Localize,
}

impl BackendKind {
    pub const ALL: [BackendKind; 7] = [
        BackendKind::Asr,
        BackendKind::Caption,
        BackendKind::Retrieve,
        BackendKind::Audiotag,
        BackendKind::Embed,
        BackendKind::Complete,
        BackendKind::Localize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Asr => "asr",
            BackendKind::Caption => "caption",
            BackendKind::Retrieve => "retrieve",
            BackendKind::Audiotag => "audiotag",
            BackendKind::Embed => "embed",
            BackendKind::Complete => "complete",
            BackendKind::Localize => "localize",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BackendKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown backend kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    /// Connection-level failure; retried.
    #[error("transport error: {0}")]
    Transport(String),
    /// Response did not match the wire schema.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// The backend answered with an error envelope.
    #[error("backend error: {0}")]
    Remote(String),
    #[error("invalid request: {0}")]
    Argument(String),
    #[error("no endpoint configured for {0}")]
    NotConfigured(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }

    pub fn category(&self) -> &'static str {
        match self {
            BackendError::Transport(_) => "transport",
            BackendError::Protocol(_) => "protocol",
            BackendError::Remote(_) => "backend",
            BackendError::Argument(_) => "argument",
            BackendError::NotConfigured(_) => "config",
        }
    }
}

/// Media passed by reference; never inlined into requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaRef {
    /// Stable key (video id, `video/frame_<ms>`, `video#<segment>`).
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_s: Option<f64>,
}

impl MediaRef {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            path: None,
            start_s: None,
            end_s: None,
        }
    }

    pub fn with_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn with_span(mut self, start_s: f64, end_s: f64) -> Self {
        self.start_s = Some(start_s);
        self.end_s = Some(end_s);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sentences: Option<u32>,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, temperature: f64) -> Self {
        Self {
            prompt: prompt.into(),
            temperature,
            max_sentences: None,
        }
    }

    pub fn detection(prompt: impl Into<String>) -> Self {
        Self::new(prompt, DETECTION_TEMPERATURE)
    }

    pub fn explanation(prompt: impl Into<String>, max_sentences: u32) -> Self {
        Self {
            max_sentences: Some(max_sentences),
            ..Self::new(prompt, EXPLANATION_TEMPERATURE)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCandidate {
    pub start_s: f64,
    pub end_s: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundTag {
    pub label: String,
    pub confidence: f64,
}

impl SoundTag {
    pub fn new(label: impl Into<String>, confidence: f64) -> Self {
        Self {
            label: label.into(),
            confidence,
        }
    }
}

/// Anything that can rank moments of a video for a text query.
pub trait Localizer: Send + Sync {
    fn localize(&self, video: &MediaRef, query: &str, top_k: usize) -> Result<Vec<MomentCandidate>, BackendError>;
}

fn decode<T: serde::de::DeserializeOwned>(kind: BackendKind, data: Value) -> Result<T, BackendError> {
    serde_json::from_value(data).map_err(|e| BackendError::Protocol(format!("{kind}: {e}")))
}

fn encode<T: Serialize>(body: &T) -> Value {
    serde_json::to_value(body).expect("request serializes")
}

/// Typed, normalizing client over one endpoint per backend kind.
#[derive(Clone, Default)]
pub struct Client {
    endpoints: BTreeMap<BackendKind, Arc<Endpoint>>,
    named_completions: BTreeMap<String, Arc<Endpoint>>,
}

impl Client {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every kind served by the same transport, without retries.
    pub fn uniform(transport: Arc<dyn Transport>) -> Self {
        let ep = Arc::new(Endpoint::from_transport(transport));
        let mut c = Self::new();
        for kind in BackendKind::ALL {
            c.endpoints.insert(kind, ep.clone());
        }
        c
    }

    pub fn with_endpoint(mut self, kind: BackendKind, endpoint: Endpoint) -> Self {
        self.endpoints.insert(kind, Arc::new(endpoint));
        self
    }

    /// Registers an additional completion endpoint selectable by name.
    pub fn with_named_completion(mut self, name: impl Into<String>, endpoint: Endpoint) -> Self {
        self.named_completions.insert(name.into(), Arc::new(endpoint));
        self
    }

    pub fn has_completion_endpoint(&self, name: &str) -> bool {
        self.named_completions.contains_key(name)
    }

    fn endpoint(&self, kind: BackendKind) -> Result<&Endpoint, BackendError> {
        self.endpoints
            .get(&kind)
            .map(Arc::as_ref)
            .ok_or_else(|| BackendError::NotConfigured(kind.to_string()))
    }

    fn call<T: serde::de::DeserializeOwned>(&self, kind: BackendKind, body: Value) -> Result<T, BackendError> {
        decode(kind, self.endpoint(kind)?.call(kind, &body)?)
    }

    pub fn asr(&self, audio: &MediaRef) -> Result<Transcript, BackendError> {
        let resp: wire::AsrResponse = self.call(BackendKind::Asr, encode(&wire::AsrRequest { audio: audio.clone() }))?;
        let transcript = Transcript::new(resp.language, resp.utterances);
        transcript.check().map_err(|e| BackendError::Protocol(format!("asr: {e}")))?;
        Ok(transcript)
    }

    /// Returns exactly `k` captions per frame. Short answers are padded by
    /// cycling through the captions the backend did return.
    pub fn caption_frames(&self, frames: &[MediaRef], prompt: &str, k: usize) -> Result<Vec<Vec<String>>, BackendError> {
        if k == 0 {
            return Err(BackendError::Argument("k must be at least 1".into()));
        }
        if frames.is_empty() {
            return Ok(Vec::new());
        }
        let req = wire::CaptionRequest {
            frames: frames.to_vec(),
            prompt: prompt.to_string(),
            k,
        };
        let resp: wire::CaptionResponse = self.call(BackendKind::Caption, encode(&req))?;
        if resp.captions.len() != frames.len() {
            return Err(BackendError::Protocol(format!(
                "caption: {} caption lists for {} frames",
                resp.captions.len(),
                frames.len()
            )));
        }
        resp.captions
            .into_iter()
            .zip(frames)
            .map(|(caps, frame)| {
                if caps.is_empty() {
                    return Err(BackendError::Protocol(format!("caption: no captions for {}", frame.id)));
                }
                Ok(caps.iter().cycle().take(k).cloned().collect())
            })
            .collect()
    }

    /// Index and score of the best-matching candidate; ties go to the lowest
    /// index.
    pub fn retrieve_best(&self, segment: &MediaRef, candidates: &[String]) -> Result<(usize, f64), BackendError> {
        if candidates.is_empty() {
            return Err(BackendError::Argument("retrieve: empty candidate list".into()));
        }
        let req = wire::RetrieveRequest {
            segment: segment.clone(),
            candidates: candidates.to_vec(),
        };
        let resp: wire::RetrieveResponse = self.call(BackendKind::Retrieve, encode(&req))?;
        if resp.scores.len() != candidates.len() {
            return Err(BackendError::Protocol(format!(
                "retrieve: {} scores for {} candidates",
                resp.scores.len(),
                candidates.len()
            )));
        }
        if resp.scores.iter().any(|s| s.is_nan()) {
            return Err(BackendError::Protocol("retrieve: NaN score".into()));
        }
        let mut best = 0;
        for (i, &s) in resp.scores.iter().enumerate() {
            if s > resp.scores[best] {
                best = i;
            }
        }
        Ok((best, resp.scores[best]))
    }

    /// Tags sorted by descending confidence.
    pub fn audiotag(&self, audio: &MediaRef) -> Result<Vec<SoundTag>, BackendError> {
        let resp: wire::AudioTagResponse =
            self.call(BackendKind::Audiotag, encode(&wire::AudioTagRequest { audio: audio.clone() }))?;
        let mut tags = resp.tags;
        if let Some(bad) = tags.iter().find(|t| !(0.0..=1.0).contains(&t.confidence)) {
            return Err(BackendError::Protocol(format!(
                "audiotag: confidence {} for {:?} outside [0, 1]",
                bad.confidence, bad.label
            )));
        }
        tags.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        Ok(tags)
    }

    /// Unit-norm embeddings, one per text.
    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        if texts.is_empty() {
            return Err(BackendError::Argument("embed: no texts".into()));
        }
        let resp: wire::EmbedResponse =
            self.call(BackendKind::Embed, encode(&wire::EmbedRequest { texts: texts.to_vec() }))?;
        if resp.vectors.len() != texts.len() {
            return Err(BackendError::Protocol(format!(
                "embed: {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        let dim = resp.vectors[0].len();
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != dim || dim == 0 {
                    return Err(BackendError::Protocol(format!(
                        "embed: dimension mismatch ({} vs {dim})",
                        v.len()
                    )));
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(BackendError::Protocol("embed: zero or non-finite vector".into()));
                }
                Ok(v.into_iter().map(|x| x / norm).collect())
            })
            .collect()
    }

    pub fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        self.complete_with(self.endpoint(BackendKind::Complete)?, req)
    }

    /// Completion on a named endpoint; `None` or `"default"` selects the
    /// default completion endpoint.
    pub fn complete_on(&self, endpoint: Option<&str>, req: &CompletionRequest) -> Result<String, BackendError> {
        match endpoint {
            None | Some("default") | Some("complete") => self.complete(req),
            Some(name) => {
                let ep = self
                    .named_completions
                    .get(name)
                    .ok_or_else(|| BackendError::NotConfigured(format!("complete endpoint {name:?}")))?;
                self.complete_with(ep, req)
            }
        }
    }

    fn complete_with(&self, ep: &Endpoint, req: &CompletionRequest) -> Result<String, BackendError> {
        if !(req.temperature >= 0.0) {
            return Err(BackendError::Argument("temperature must be non-negative".into()));
        }
        let resp: wire::CompleteResponse = decode(BackendKind::Complete, ep.call(BackendKind::Complete, &encode(req))?)?;
        Ok(resp.text)
    }

    pub fn localize(&self, video: &MediaRef, query: &str, top_k: usize) -> Result<Vec<MomentCandidate>, BackendError> {
        if top_k == 0 {
            return Err(BackendError::Argument("top_k must be at least 1".into()));
        }
        let req = wire::LocalizeRequest {
            video: video.clone(),
            query: query.to_string(),
            top_k,
        };
        let resp: wire::LocalizeResponse = self.call(BackendKind::Localize, encode(&req))?;
        normalize_candidates(resp.candidates, top_k)
    }
}

pub(crate) fn normalize_candidates(
    mut candidates: Vec<MomentCandidate>,
    top_k: usize,
) -> Result<Vec<MomentCandidate>, BackendError> {
    if let Some(bad) = candidates.iter().find(|c| !(c.start_s < c.end_s) || c.score.is_nan()) {
        return Err(BackendError::Protocol(format!(
            "localize: invalid candidate [{}, {}] score {}",
            bad.start_s, bad.end_s, bad.score
        )));
    }
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    candidates.truncate(top_k);
    Ok(candidates)
}

impl Localizer for Client {
    fn localize(&self, video: &MediaRef, query: &str, top_k: usize) -> Result<Vec<MomentCandidate>, BackendError> {
        Client::localize(self, video, query, top_k)
    }
}

#[cfg(test)]
mod tests;
