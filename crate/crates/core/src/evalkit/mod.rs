//! Explanation scores, moment-localization rationale quality, human-rating
//! aggregation, taxonomy classification and report rendering.

mod human;
mod moments;
mod report;
mod scores;
mod similarity;
mod taxonomy;

use crate::backends::BackendError;

pub use human::{aggregate_comparison, aggregate_rating, summarize_human, ComparisonRecord, HumanSummary, RatingRecord, Side, Tally, RATERS};
pub use moments::{
    concat_moments, max_iou, rationale_quality, run_rationale_eval, temporal_iou, Exclusion, Interval, RationaleEval,
    RationaleQuality, RqItem, RqItemReport, DEFAULT_TAUS,
};
pub use report::{latest_report, render_table2, render_taxonomy, write_report, EvalReport, ItemScores};
pub use scores::{threshold_report, AtK, Metric, ScoreReport, RA_THRESHOLDS, SENTBERT_THRESHOLDS};
pub use similarity::{alignment_score, cosine, ra_score, sentbert_score, split_sentences};
pub use taxonomy::{
    classification_prompt, classify_taxonomy, default_categories, load_categories, match_category, taxonomy_report,
    Category, TaxonomyRow, CLASSIFY_TEMPERATURE, UNCLASSIFIED,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0}")]
    Argument(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl EvalError {
    pub fn category(&self) -> &'static str {
        match self {
            EvalError::Argument(_) => "argument",
            EvalError::Io(_) => "io",
            EvalError::Backend(e) => e.category(),
        }
    }
}
