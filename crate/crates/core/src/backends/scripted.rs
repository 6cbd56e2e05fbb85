//! Deterministic replay of backend responses from a fixture file.
//!
//! Fixture layout (JSON):
//!
//! ```json
//! {
//!   "asr":      { "<media id>": { "language": "en", "utterances": [...] } },
//!   "caption":  { "<frame id>" | "*": ["caption", ...] },
//!   "retrieve": { "<segment id>" | "*": { "<candidate>": 0.9 } },
//!   "audiotag": { "<media id>": [ { "label": "music", "confidence": 0.8 } ] },
//!   "embed":    { "<text>": [1.0, 0.0] },
//!   "embed_fallback": "hashed_bow",
//!   "complete": [ { "prompt": "...", "reply": "..." },
//!                 { "prompt_sha256": "<hex>", "reply": "..." },
//!                 { "contains": ["a", "b"], "temperature": 0.0, "reply": "..." } ],
//!   "localize": [ { "video": "<id>", "query": "...", "candidates": [...] } ]
//! }
//! ```
//!
//! Lookups that match nothing produce an error response.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::wire::{self, AsrResponse};
use super::{BackendError, BackendKind, MomentCandidate, SoundTag, Transport};

/// Dimension of the hashed bag-of-words fallback embedding.
const BOW_DIM: usize = 64;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptFixture {
    #[serde(default)]
    pub asr: BTreeMap<String, AsrResponse>,
    #[serde(default)]
    pub caption: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub retrieve: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub audiotag: BTreeMap<String, Vec<SoundTag>>,
    #[serde(default)]
    pub embed: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_fallback: Option<EmbedFallback>,
    #[serde(default)]
    pub complete: Vec<CompleteRule>,
    #[serde(default)]
    pub localize: Vec<LocalizeRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedFallback {
    HashedBow,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompleteRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    pub reply: String,
}

impl CompleteRule {
    pub fn exact(prompt: impl Into<String>, reply: impl Into<String>) -> Self {
        Self {
            prompt: Some(prompt.into()),
            reply: reply.into(),
            ..Default::default()
        }
    }

    pub fn containing<S: Into<String>>(needles: impl IntoIterator<Item = S>, reply: impl Into<String>) -> Self {
        Self {
            contains: needles.into_iter().map(Into::into).collect(),
            reply: reply.into(),
            ..Default::default()
        }
    }

    pub fn at_temperature(mut self, t: f64) -> Self {
        self.temperature = Some(t);
        self
    }

    fn matches(&self, prompt: &str, key: &str, temperature: f64) -> bool {
        if self.prompt.is_none() && self.prompt_sha256.is_none() && self.contains.is_empty() {
            return false;
        }
        self.prompt.as_deref().is_none_or(|p| p == prompt)
            && self.prompt_sha256.as_deref().is_none_or(|h| h.eq_ignore_ascii_case(key))
            && self.contains.iter().all(|n| prompt.contains(n.as_str()))
            && self.temperature.is_none_or(|t| (t - temperature).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizeRule {
    pub video: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_contains: Option<String>,
    pub candidates: Vec<MomentCandidate>,
}

/// Hex SHA-256 of a prompt, the key for scripted completions.
pub fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Deterministic bag-of-words embedding over hashed lowercase tokens.
pub fn hashed_bow_embedding(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; BOW_DIM];
    let lower = text.to_lowercase();
    let mut any = false;
    for tok in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let h = Sha256::digest(tok.as_bytes());
        let idx = u64::from_le_bytes(h[..8].try_into().expect("8 bytes")) as usize % BOW_DIM;
        v[idx] += 1.0;
        any = true;
    }
    if !any {
        v[0] = 1.0;
    }
    v
}

impl ScriptFixture {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Argument(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BackendError::Argument(format!("{}: {e}", path.display())))
    }
}

/// Replays a [`ScriptFixture`]. Pure: identical requests get identical
/// responses.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTransport {
    pub fixture: ScriptFixture,
}

impl ScriptedTransport {
    pub fn new(fixture: ScriptFixture) -> Self {
        Self { fixture }
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        ScriptFixture::load(path).map(Self::new)
    }

    fn parse<T: serde::de::DeserializeOwned>(kind: BackendKind, body: &Value) -> Result<T, BackendError> {
        serde_json::from_value(body.clone()).map_err(|e| BackendError::Protocol(format!("{kind} request: {e}")))
    }

    fn missing(kind: BackendKind, key: &str) -> BackendError {
        BackendError::Remote(format!("no scripted {kind} response for {key:?}"))
    }
}

impl Transport for ScriptedTransport {
    fn call(&self, kind: BackendKind, body: &Value) -> Result<Value, BackendError> {
        let f = &self.fixture;
        match kind {
            BackendKind::Asr => {
                let req: wire::AsrRequest = Self::parse(kind, body)?;
                let resp = f.asr.get(&req.audio.id).ok_or_else(|| Self::missing(kind, &req.audio.id))?;
                Ok(json!(resp))
            }
            BackendKind::Caption => {
                let req: wire::CaptionRequest = Self::parse(kind, body)?;
                let captions = req
                    .frames
                    .iter()
                    .map(|fr| {
                        f.caption
                            .get(&fr.id)
                            .or_else(|| f.caption.get("*"))
                            .cloned()
                            .ok_or_else(|| Self::missing(kind, &fr.id))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(json!(wire::CaptionResponse { captions }))
            }
            BackendKind::Retrieve => {
                let req: wire::RetrieveRequest = Self::parse(kind, body)?;
                let table = f
                    .retrieve
                    .get(&req.segment.id)
                    .or_else(|| f.retrieve.get("*"))
                    .ok_or_else(|| Self::missing(kind, &req.segment.id))?;
                let scores = req
                    .candidates
                    .iter()
                    .map(|c| table.get(c).copied().unwrap_or(0.0))
                    .collect();
                Ok(json!(wire::RetrieveResponse { scores }))
            }
            BackendKind::Audiotag => {
                let req: wire::AudioTagRequest = Self::parse(kind, body)?;
                let tags = f.audiotag.get(&req.audio.id).ok_or_else(|| Self::missing(kind, &req.audio.id))?;
                Ok(json!(wire::AudioTagResponse { tags: tags.clone() }))
            }
            BackendKind::Embed => {
                let req: wire::EmbedRequest = Self::parse(kind, body)?;
                let vectors = req
                    .texts
                    .iter()
                    .map(|t| match (f.embed.get(t), f.embed_fallback) {
                        (Some(v), _) => Ok(v.clone()),
                        (None, Some(EmbedFallback::HashedBow)) => Ok(hashed_bow_embedding(t)),
                        (None, None) => Err(Self::missing(kind, t)),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(json!(wire::EmbedResponse { vectors }))
            }
            BackendKind::Complete => {
                let req: super::CompletionRequest = Self::parse(kind, body)?;
                let key = prompt_key(&req.prompt);
                let rule = f
                    .complete
                    .iter()
                    .find(|r| r.matches(&req.prompt, &key, req.temperature))
                    .ok_or_else(|| Self::missing(kind, &key))?;
                Ok(json!(wire::CompleteResponse { text: rule.reply.clone() }))
            }
            BackendKind::Localize => {
                let req: wire::LocalizeRequest = Self::parse(kind, body)?;
                let rule = f
                    .localize
                    .iter()
                    .find(|r| {
                        r.video == req.video.id
                            && r.query.as_deref().is_none_or(|q| q == req.query)
                            && r.query_contains.as_deref().is_none_or(|q| req.query.contains(q))
                    })
                    .ok_or_else(|| Self::missing(kind, &format!("{}::{}", req.video.id, prompt_key(&req.query))))?;
                Ok(json!(wire::LocalizeResponse {
                    candidates: rule.candidates.clone()
                }))
            }
        }
    }
}
