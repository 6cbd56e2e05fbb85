use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{normalize_candidates, BackendError, Client, Localizer, MediaRef, MomentCandidate};

/// A segment interval with its selected caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCaption {
    pub start_s: f64,
    pub end_s: f64,
    pub caption: String,
}

/// In-process localizer: ranks a video's segments by cosine similarity
/// between the query embedding and each segment caption embedding.
pub struct FallbackLocalizer {
    embedder: Client,
    scenes: BTreeMap<String, Vec<SceneCaption>>,
}

impl FallbackLocalizer {
    pub fn new(embedder: Client) -> Self {
        Self {
            embedder,
            scenes: BTreeMap::new(),
        }
    }

    pub fn with_scenes(mut self, video_id: impl Into<String>, scenes: Vec<SceneCaption>) -> Self {
        self.scenes.insert(video_id.into(), scenes);
        self
    }

    pub fn insert(&mut self, video_id: impl Into<String>, scenes: Vec<SceneCaption>) {
        self.scenes.insert(video_id.into(), scenes);
    }
}

impl Localizer for FallbackLocalizer {
    fn localize(&self, video: &MediaRef, query: &str, top_k: usize) -> Result<Vec<MomentCandidate>, BackendError> {
        if top_k == 0 {
            return Err(BackendError::Argument("top_k must be at least 1".into()));
        }
        let scenes = self
            .scenes
            .get(&video.id)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| BackendError::Argument(format!("no scene captions for video {:?}", video.id)))?;
        let mut texts = Vec::with_capacity(scenes.len() + 1);
        texts.push(query.to_string());
        texts.extend(scenes.iter().map(|s| s.caption.clone()));
        let vectors = self.embedder.embed(&texts)?;
        let (q, rest) = vectors.split_first().expect("query embedded");
        let candidates = scenes
            .iter()
            .zip(rest)
            .map(|(scene, v)| MomentCandidate {
                start_s: scene.start_s,
                end_s: scene.end_s,
                score: q.iter().zip(v).map(|(a, b)| a * b).sum(),
            })
            .collect();
        normalize_candidates(candidates, top_k)
    }
}
