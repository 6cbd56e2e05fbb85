use serde::{Deserialize, Serialize};

use crate::backends::{Client, MediaRef, SoundTag};

use super::PromptError;

pub const TAG_THRESHOLD: f64 = 0.3;
pub const MAX_TAGS: usize = 3;

/// At most three tags, each above the confidence threshold, most
/// confident first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SoundTagSet {
    pub tags: Vec<SoundTag>,
}

impl SoundTagSet {
    pub fn select(mut tags: Vec<SoundTag>, threshold: f64, max: usize) -> Self {
        tags.retain(|t| t.confidence > threshold);
        tags.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        tags.truncate(max);
        Self { tags }
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

pub fn collect_sound_tags(audio: &MediaRef, client: &Client) -> Result<SoundTagSet, PromptError> {
    Ok(SoundTagSet::select(client.audiotag(audio)?, TAG_THRESHOLD, MAX_TAGS))
}
