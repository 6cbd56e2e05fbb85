use serde::{Deserialize, Serialize};

use crate::backends::{Client, MediaRef};
use crate::scalar::Scalar;
use crate::segmenter::{FrameIndex, Segment};

use super::PromptError;

/// Frame sampling times `start, start + 1/fps, ...` strictly below the
/// segment end; never empty.
pub fn frame_times<T: Scalar>(segment: &Segment<T>, fps: T) -> Result<Vec<T>, PromptError> {
    if !(fps > T::zero()) || !fps.is_finite() {
        return Err(PromptError::Argument(format!("fps must be positive, got {fps}")));
    }
    let mut times = vec![segment.start_s];
    for i in 1.. {
        let t = segment.start_s + T::from_count(i) / fps;
        if t >= segment.end_s {
            break;
        }
        times.push(t);
    }
    Ok(times)
}

/// The caption chosen for one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentCaption {
    pub segment_index: usize,
    pub caption: String,
    pub retrieval_score: f64,
    /// Frames times captions per frame.
    pub corpus_size: usize,
}

/// Media key of the frame nearest `t`.
pub fn frame_ref(video_id: &str, t_s: f64, path: &std::path::Path) -> MediaRef {
    MediaRef::new(format!("{video_id}/frame_{}", (t_s * 1000.0).round() as u64)).with_path(path)
}

/// `k` captions for every sampled frame of the segment, frame by frame.
pub fn build_caption_corpus(
    video_id: &str,
    segment: &Segment<f64>,
    frames: &FrameIndex,
    client: &Client,
    prompt: &str,
    k: usize,
    fps: f64,
) -> Result<Vec<String>, PromptError> {
    if k == 0 {
        return Err(PromptError::Argument("k must be at least 1".into()));
    }
    let tolerance = 1.0 / (2.0 * fps);
    let refs = frame_times(segment, fps)?
        .into_iter()
        .map(|t| {
            frames
                .nearest(t, tolerance)
                .map(|(ft, path)| frame_ref(video_id, ft, path))
                .ok_or_else(|| PromptError::Media {
                    id: video_id.to_string(),
                    message: format!("no frame within {tolerance:.3}s of {t:.3}s in {}", frames.dir.display()),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(client.caption_frames(&refs, prompt, k)?.into_iter().flatten().collect())
}

/// Media key of a segment.
pub fn segment_ref(video_id: &str, segment: &Segment<f64>, frames_dir: &std::path::Path) -> MediaRef {
    MediaRef::new(format!("{video_id}#{}", segment.index))
        .with_path(frames_dir)
        .with_span(segment.start_s, segment.end_s)
}

/// Retrieves the corpus caption that best matches the segment.
pub fn select_segment_caption(
    video_id: &str,
    segment: &Segment<f64>,
    corpus: &[String],
    frames_dir: &std::path::Path,
    client: &Client,
) -> Result<SegmentCaption, PromptError> {
    if corpus.is_empty() {
        return Err(PromptError::Argument(format!("empty caption corpus for segment {}", segment.index)));
    }
    let (idx, score) = client.retrieve_best(&segment_ref(video_id, segment, frames_dir), corpus)?;
    Ok(SegmentCaption {
        segment_index: segment.index,
        caption: corpus[idx].clone(),
        retrieval_score: score,
        corpus_size: corpus.len(),
    })
}
