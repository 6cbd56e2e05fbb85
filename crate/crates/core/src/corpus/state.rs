use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Filtering stage that produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStage {
    AMedia,
    BFunnyWithCaption,
    CTranscriptOnly,
    DDivergence,
}

impl FilterStage {
    pub const ALL: [FilterStage; 4] = [
        FilterStage::AMedia,
        FilterStage::BFunnyWithCaption,
        FilterStage::CTranscriptOnly,
        FilterStage::DDivergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterStage::AMedia => "a_media",
            FilterStage::BFunnyWithCaption => "b_funny_with_caption",
            FilterStage::CTranscriptOnly => "c_transcript_only",
            FilterStage::DDivergence => "d_divergence",
        }
    }

    pub fn letter(self) -> char {
        match self {
            FilterStage::AMedia => 'a',
            FilterStage::BFunnyWithCaption => 'b',
            FilterStage::CTranscriptOnly => 'c',
            FilterStage::DDivergence => 'd',
        }
    }
}

impl fmt::Display for FilterStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FilterStage::ALL
            .into_iter()
            .find(|st| st.as_str() == s || s.len() == 1 && s.starts_with(st.letter()))
            .ok_or_else(|| format!("unknown filter stage {s:?}"))
    }
}

/// The five manual safety-review criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyCriterion {
    Discrimination,
    AnimalCruelty,
    DangerousOrSelfharm,
    Obscenity,
    Shocking,
}

impl SafetyCriterion {
    pub const ALL: [SafetyCriterion; 5] = [
        SafetyCriterion::Discrimination,
        SafetyCriterion::AnimalCruelty,
        SafetyCriterion::DangerousOrSelfharm,
        SafetyCriterion::Obscenity,
        SafetyCriterion::Shocking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SafetyCriterion::Discrimination => "discrimination",
            SafetyCriterion::AnimalCruelty => "animal_cruelty",
            SafetyCriterion::DangerousOrSelfharm => "dangerous_or_selfharm",
            SafetyCriterion::Obscenity => "obscenity",
            SafetyCriterion::Shocking => "shocking",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            SafetyCriterion::Discrimination => {
                "Discrimination based on race, gender, sexual orientation, age, or disability"
            }
            SafetyCriterion::AnimalCruelty => "Acts of animal cruelty",
            SafetyCriterion::DangerousOrSelfharm => {
                "Dangerous goods, services, activities, or self-harm (drugs, violence, bullying)"
            }
            SafetyCriterion::Obscenity => "Obscenities or profanities, explicit language or sexual actions",
            SafetyCriterion::Shocking => "Shocking content such as gunshots or explosions",
        }
    }
}

impl fmt::Display for SafetyCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SafetyCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SafetyCriterion::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown safety criterion {s:?}"))
    }
}

/// Lifecycle of a record through filtering and safety triage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum PipelineState {
    #[default]
    Ingested,
    FilteredRejected {
        stage: FilterStage,
    },
    FilterAccepted,
    TriagePending,
    TriageRejected {
        criterion: SafetyCriterion,
    },
    Published,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid transition for {id:?}: {from} -> {to}")]
pub struct StateError {
    pub id: String,
    pub from: PipelineState,
    pub to: PipelineState,
}

impl PipelineState {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineState::Ingested => "ingested",
            PipelineState::FilteredRejected { .. } => "filtered_rejected",
            PipelineState::FilterAccepted => "filter_accepted",
            PipelineState::TriagePending => "triage_pending",
            PipelineState::TriageRejected { .. } => "triage_rejected",
            PipelineState::Published => "published",
        }
    }

    /// Whether the record passed filtering (any state at or after
    /// `filter_accepted`).
    pub fn is_filter_accepted_or_beyond(&self) -> bool {
        matches!(
            self,
            PipelineState::FilterAccepted
                | PipelineState::TriagePending
                | PipelineState::TriageRejected { .. }
                | PipelineState::Published
        )
    }

    pub fn is_reviewed(&self) -> bool {
        matches!(
            self,
            PipelineState::TriageRejected { .. } | PipelineState::Published
        )
    }

    pub fn can_transition_to(&self, next: &PipelineState) -> bool {
        use PipelineState::*;
        matches!(
            (self, next),
            (Ingested, FilteredRejected { .. })
                | (Ingested, FilterAccepted)
                | (FilterAccepted, TriagePending)
                | (TriagePending, Published)
                | (TriagePending, TriageRejected { .. })
        )
    }

    pub fn transition(self, id: &str, next: PipelineState) -> Result<PipelineState, StateError> {
        if self.can_transition_to(&next) {
            Ok(next)
        } else {
            Err(StateError {
                id: id.to_string(),
                from: self,
                to: next,
            })
        }
    }
}

impl fmt::Display for PipelineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineState::FilteredRejected { stage } => write!(f, "filtered_rejected({stage})"),
            PipelineState::TriageRejected { criterion } => write!(f, "triage_rejected({criterion})"),
            other => f.write_str(other.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejected_states_are_terminal() {
        let rejected = [
            PipelineState::FilteredRejected {
                stage: FilterStage::BFunnyWithCaption,
            },
            PipelineState::TriageRejected {
                criterion: SafetyCriterion::Shocking,
            },
        ];
        for r in rejected {
            assert!(!r.can_transition_to(&PipelineState::Published));
            assert!(!r.can_transition_to(&PipelineState::TriagePending));
        }
    }

    #[test]
    fn happy_path() {
        let s = PipelineState::Ingested
            .transition("v", PipelineState::FilterAccepted)
            .and_then(|s| s.transition("v", PipelineState::TriagePending))
            .and_then(|s| s.transition("v", PipelineState::Published))
            .unwrap();
        assert_eq!(s, PipelineState::Published);
        assert!(PipelineState::Ingested
            .transition("v", PipelineState::Published)
            .is_err());
    }

    #[test]
    fn stage_parses_letters() {
        assert_eq!("c".parse::<FilterStage>().unwrap(), FilterStage::CTranscriptOnly);
        assert_eq!(
            "d_divergence".parse::<FilterStage>().unwrap(),
            FilterStage::DDivergence
        );
        assert!("e".parse::<FilterStage>().is_err());
    }

    #[test]
    fn state_serializes_tagged() {
        let s = PipelineState::TriageRejected {
            criterion: SafetyCriterion::AnimalCruelty,
        };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"state":"triage_rejected","criterion":"animal_cruelty"}"#);
        assert_eq!(s.to_string(), "triage_rejected(animal_cruelty)");
    }
}
