use serde::{Deserialize, Serialize};

use super::VideoRecord;

/// Hard cap on annotated moments per video.
pub const MAX_MOMENTS: usize = 3;

/// Duration above which a record draws a warning (never an error).
pub const DEFAULT_DURATION_CAP_S: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonPositiveDuration,
    MomentCountExceeded,
    InvertedInterval,
    MomentOutOfBounds,
    EmptyExplanation,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::NonPositiveDuration => "non_positive_duration",
            ViolationKind::MomentCountExceeded => "moment_count_exceeded",
            ViolationKind::InvertedInterval => "inverted_interval",
            ViolationKind::MomentOutOfBounds => "moment_out_of_bounds",
            ViolationKind::EmptyExplanation => "empty_explanation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub record_id: String,
    pub kind: ViolationKind,
    /// Index of the offending moment, if the violation is moment-level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment: Option<usize>,
}

/// Returns every invariant violation of the record's annotations. An empty
/// list means the record is valid.
pub fn validate_annotations(record: &VideoRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, moment| {
        out.push(Violation {
            record_id: record.id.clone(),
            kind,
            moment,
        })
    };

    let duration_ok = record.duration_s > 0.0 && record.duration_s.is_finite();
    if !duration_ok {
        push(ViolationKind::NonPositiveDuration, None);
    }
    if record.annotations.len() > MAX_MOMENTS {
        push(ViolationKind::MomentCountExceeded, None);
    }
    for (i, m) in record.annotations.iter().enumerate() {
        // NaN compares false everywhere, so it lands in the inverted bucket
        if !(m.start_s < m.end_s) {
            push(ViolationKind::InvertedInterval, Some(i));
        } else if m.start_s < 0.0 || (duration_ok && m.end_s > record.duration_s) {
            push(ViolationKind::MomentOutOfBounds, Some(i));
        }
        if m.explanation.trim().is_empty() {
            push(ViolationKind::EmptyExplanation, Some(i));
        }
    }
    out
}

pub fn duration_warning(record: &VideoRecord, cap_s: f64) -> Option<String> {
    (record.duration_s > cap_s).then(|| {
        format!(
            "{}: duration {:.1}s exceeds the {:.0}s guideline",
            record.id, record.duration_s, cap_s
        )
    })
}

/// Flags explanations that lack a justification clause in the
/// "[what]. It is funny because [why]" format. Advisory only.
pub fn lint_explanation_format(explanation: &str) -> Option<&'static str> {
    let lower = explanation.to_lowercase();
    let has_why = ["because", "since ", "due to", "which is why", "the joke is"]
        .iter()
        .any(|m| lower.contains(m));
    if has_why {
        None
    } else {
        Some("explanation has no justification clause (e.g. \"It is funny because ...\")")
    }
}
