use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::EvalError;

pub const SENTBERT_THRESHOLDS: [f64; 4] = [0.7, 0.6, 0.5, 0.4];
pub const RA_THRESHOLDS: [f64; 2] = [0.8, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Sentbert,
    RoscoeRa,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Sentbert => "sentbert",
            Metric::RoscoeRa => "roscoe_ra",
        }
    }

    pub fn default_thresholds(self) -> &'static [f64] {
        match self {
            Metric::Sentbert => &SENTBERT_THRESHOLDS,
            Metric::RoscoeRa => &RA_THRESHOLDS,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sentbert" => Ok(Metric::Sentbert),
            "ra" | "roscoe_ra" | "roscoe" => Ok(Metric::RoscoeRa),
            other => Err(format!("unknown metric {other:?} (expected sentbert or ra)")),
        }
    }
}

/// One threshold column: the fraction of items scoring at least `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtK<T> {
    pub k: T,
    pub proportion: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport<T> {
    pub metric: Metric,
    pub per_item: BTreeMap<String, T>,
    pub mean: T,
    /// Ascending in `k`, so proportions are non-increasing.
    pub at_thresholds: Vec<AtK<T>>,
}

impl<T: Scalar> ScoreReport<T> {
    pub fn at(&self, k: T) -> Option<T> {
        self.at_thresholds.iter().find(|a| a.k == k).map(|a| a.proportion)
    }
}

/// Mean and `@K` proportions (`score >= K`) over per-item scores.
pub fn threshold_report<T: Scalar>(metric: Metric, scores: &BTreeMap<String, T>, thresholds: &[T]) -> Result<ScoreReport<T>, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Argument("threshold report over no scores".into()));
    }
    if let Some((id, _)) = scores.iter().find(|(_, s)| !s.is_finite()) {
        return Err(EvalError::Argument(format!("non-finite score for {id:?}")));
    }
    let mut ks: Vec<T> = thresholds.to_vec();
    ks.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
    ks.dedup();
    let n = T::from_count(scores.len());
    let at_thresholds = ks
        .into_iter()
        .map(|k| AtK {
            k,
            proportion: T::from_count(scores.values().filter(|&&s| s >= k).count()) / n,
        })
        .collect();
    Ok(ScoreReport {
        metric,
        per_item: scores.clone(),
        mean: scores.values().copied().sum::<T>() / n,
        at_thresholds,
    })
}
