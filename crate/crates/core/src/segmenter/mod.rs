//! Content-delta shot detection and utterance-based boundary refinement.
//!
//! A video is cut into segments wherever the mean HSV pixel value changes
//! sharply between consecutive frames; the cuts are then merged with the
//! start times of transcript utterances.

mod features;
mod frames;
mod refine;
mod shots;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use features::{frame_features, rgb_to_hsv};
pub use frames::{load_features, FrameIndex, HSV_SIDECAR};
pub use refine::{refine_with_utterances, DEDUP_TOLERANCE_S};
pub use shots::{content_delta, detect_shots, DEFAULT_MIN_SCENE_S, DEFAULT_THRESHOLD};

/// Per-frame mean pixel value in HSV space, each channel in `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameFeature<T> {
    pub time_s: T,
    pub hsv_mean: [T; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentOrigin {
    ShotBoundary,
    UtteranceRefined,
    WholeVideo,
}

/// A span `[start_s, end_s)` of one video. Segments of a video tile
/// `[0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub index: usize,
    pub start_s: T,
    pub end_s: T,
    pub origin: SegmentOrigin,
}

impl<T: Scalar> Segment<T> {
    pub fn len(&self) -> T {
        self.end_s - self.start_s
    }

    /// Half-open containment; `last` closes the interval at its end.
    pub fn contains(&self, t: T, last: bool) -> bool {
        t >= self.start_s && (t < self.end_s || (last && t <= self.end_s))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SegmentError {
    #[error("{0}")]
    Argument(String),
    #[error("{path}: {message}")]
    Media { path: std::path::PathBuf, message: String },
}

impl SegmentError {
    pub fn category(&self) -> &'static str {
        match self {
            SegmentError::Argument(_) => "argument",
            SegmentError::Media { .. } => "media",
        }
    }
}
