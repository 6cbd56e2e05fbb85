use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::VideoRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub video_count: usize,
    pub explanation_count: usize,
    /// Number of videos by annotated-moment count.
    pub by_moments: BTreeMap<usize, usize>,
    /// Mean whitespace-delimited word count over all explanations.
    pub mean_explanation_words: f64,
}

pub fn corpus_stats(records: &[VideoRecord]) -> StatsReport {
    let mut by_moments = BTreeMap::new();
    let mut explanation_count = 0;
    let mut words = 0usize;
    for r in records {
        *by_moments.entry(r.annotations.len()).or_insert(0) += 1;
        explanation_count += r.annotations.len();
        words += r
            .annotations
            .iter()
            .map(|m| m.explanation.split_whitespace().count())
            .sum::<usize>();
    }
    StatsReport {
        video_count: records.len(),
        explanation_count,
        by_moments,
        mean_explanation_words: if explanation_count == 0 {
            0.0
        } else {
            words as f64 / explanation_count as f64
        },
    }
}

impl std::fmt::Display for StatsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "videos:        {}", self.video_count)?;
        writeln!(f, "explanations:  {}", self.explanation_count)?;
        for (k, v) in &self.by_moments {
            writeln!(f, "  {k} moment(s): {v}")?;
        }
        write!(f, "mean words:    {:.1}", self.mean_explanation_words)
    }
}
