use super::{Segment, SegmentOrigin};
use crate::corpus::Transcript;
use crate::scalar::Scalar;

/// Boundaries closer than this are merged (sub-frame jitter at 5 fps).
pub const DEDUP_TOLERANCE_S: f64 = 0.05;

/// Merges shot boundaries with utterance start times and tiles
/// `[0, duration_s]` with the resulting segments.
///
/// Candidates are visited in time order; one within the tolerance of the
/// previously kept boundary (or of either end of the video) is dropped.
pub fn refine_with_utterances<T: Scalar>(
    shot_boundaries: &[T],
    transcript: &Transcript,
    duration_s: T,
) -> Vec<Segment<T>> {
    let tol = T::lit(DEDUP_TOLERANCE_S);
    let zero = T::zero();

    let mut candidates: Vec<(T, SegmentOrigin)> = shot_boundaries
        .iter()
        .map(|&t| (t, SegmentOrigin::ShotBoundary))
        .chain(
            transcript
                .utterances
                .iter()
                .map(|u| (T::lit(u.start_s), SegmentOrigin::UtteranceRefined)),
        )
        .filter(|(t, _)| t.is_finite() && *t > zero && *t < duration_s)
        .collect();
    // stable: at equal times shot boundaries come first
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));

    let mut kept: Vec<(T, SegmentOrigin)> = Vec::new();
    let mut last = zero;
    for (t, origin) in candidates {
        if t - last <= tol || duration_s - t <= tol {
            continue;
        }
        kept.push((t, origin));
        last = t;
    }

    if kept.is_empty() {
        return vec![Segment {
            index: 0,
            start_s: zero,
            end_s: duration_s,
            origin: SegmentOrigin::WholeVideo,
        }];
    }

    let mut segments = Vec::with_capacity(kept.len() + 1);
    let mut start = (zero, SegmentOrigin::ShotBoundary);
    for (i, &(t, origin)) in kept.iter().chain(std::iter::once(&(duration_s, SegmentOrigin::ShotBoundary))).enumerate() {
        segments.push(Segment {
            index: i,
            start_s: start.0,
            end_s: t,
            origin: start.1,
        });
        start = (t, origin);
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;

    fn transcript(starts: &[f64]) -> Transcript {
        Transcript::new(
            "en",
            starts.iter().map(|&s| Utterance::new(s, s + 0.5, "hi")).collect(),
        )
    }

    fn spans(segs: &[Segment<f64>]) -> Vec<(f64, f64)> {
        segs.iter().map(|s| (s.start_s, s.end_s)).collect()
    }

    #[test]
    fn shot_and_utterance() {
        let segs = refine_with_utterances(&[7.2], &transcript(&[4.0]), 10.0);
        assert_eq!(spans(&segs), vec![(0.0, 4.0), (4.0, 7.2), (7.2, 10.0)]);
        assert_eq!(segs[1].origin, SegmentOrigin::UtteranceRefined);
        assert_eq!(segs[2].origin, SegmentOrigin::ShotBoundary);
    }

    #[test]
    fn nothing_gives_whole_video() {
        let segs = refine_with_utterances::<f64>(&[], &transcript(&[]), 8.0);
        assert_eq!(spans(&segs), vec![(0.0, 8.0)]);
        assert_eq!(segs[0].origin, SegmentOrigin::WholeVideo);
    }

    #[test]
    fn near_duplicates_merge() {
        let segs = refine_with_utterances(&[4.01], &transcript(&[4.0]), 10.0);
        assert_eq!(spans(&segs), vec![(0.0, 4.0), (4.0, 10.0)]);
    }

    #[test]
    fn utterance_at_zero_adds_nothing() {
        let segs = refine_with_utterances(&[], &transcript(&[0.0, 0.03]), 3.0);
        assert_eq!(segs.len(), 1);
    }

    #[test]
    fn f32_variant() {
        let segs = refine_with_utterances(&[2.5f32], &transcript(&[1.0]), 4.0f32);
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[2].end_s, 4.0f32);
    }
}
