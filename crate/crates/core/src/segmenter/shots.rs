use super::{FrameFeature, SegmentError};
use crate::scalar::Scalar;

/// Default content-delta threshold.
pub const DEFAULT_THRESHOLD: f64 = 27.0;
/// Default minimum scene length in seconds.
pub const DEFAULT_MIN_SCENE_S: f64 = 0.6;

/// Mean absolute per-channel difference between two HSV means.
pub fn content_delta<T: Scalar>(a: &FrameFeature<T>, b: &FrameFeature<T>) -> T {
    let sum: T = (0..3).map(|c| (a.hsv_mean[c] - b.hsv_mean[c]).abs()).sum();
    sum / T::lit(3.0)
}

/// Returns the times of frames whose content delta to the previous frame
/// exceeds `threshold`, provided the scene being closed is at least
/// `min_scene_s` long. The first scene starts at the first frame.
pub fn detect_shots<T: Scalar>(
    features: &[FrameFeature<T>],
    threshold: T,
    min_scene_s: T,
) -> Result<Vec<T>, SegmentError> {
    let Some(first) = features.first() else {
        return Err(SegmentError::Argument("shot detection needs at least one frame".into()));
    };
    let mut scene_start = first.time_s;
    let mut cuts = Vec::new();
    for pair in features.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if content_delta(prev, cur) > threshold && cur.time_s - scene_start >= min_scene_s {
            cuts.push(cur.time_s);
            scene_start = cur.time_s;
        }
    }
    Ok(cuts)
}
