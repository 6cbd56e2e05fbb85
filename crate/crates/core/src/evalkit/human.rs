use std::collections::BTreeMap;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use super::EvalError;

pub const RATERS: usize = 5;

/// Five ratings of one item on the scale `{0, 0.25, 0.5, 0.75, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord<T> {
    pub item_id: String,
    /// Which system produced the rated explanation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub ratings: Vec<T>,
}

fn quarter_steps<T: Num + Copy>() -> [T; 5] {
    let one = T::one();
    let two = one + one;
    let four = two + two;
    let q = one / four;
    [T::zero(), q, q + q, q + q + q, one]
}

/// Mean of the five ratings after dropping one highest and one lowest.
pub fn aggregate_rating<T: Num + Copy + PartialOrd>(ratings: &[T]) -> Result<T, EvalError> {
    if ratings.len() != RATERS {
        return Err(EvalError::Argument(format!("expected {RATERS} ratings, got {}", ratings.len())));
    }
    let scale = quarter_steps::<T>();
    if !ratings.iter().all(|r| scale.contains(r)) {
        return Err(EvalError::Argument("rating off the {0, 0.25, 0.5, 0.75, 1} scale".into()));
    }
    let mut sorted = ratings.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scale values are ordered"));
    let three = T::one() + T::one() + T::one();
    Ok((sorted[1] + sorted[2] + sorted[3]) / three)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub pair_id: String,
    pub votes: Vec<Side>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub a: usize,
    pub b: usize,
    pub proportion_a: f64,
    pub proportion_b: f64,
}

/// Per-pair vote counts; every pair needs exactly five votes.
pub fn aggregate_comparison(votes: &BTreeMap<String, Vec<Side>>) -> Result<BTreeMap<String, Tally>, EvalError> {
    votes
        .iter()
        .map(|(pair, vs)| {
            if vs.len() != RATERS {
                return Err(EvalError::Argument(format!("{pair}: expected {RATERS} votes, got {}", vs.len())));
            }
            let a = vs.iter().filter(|&&s| s == Side::A).count();
            let b = vs.len() - a;
            let n = vs.len() as f64;
            Ok((pair.clone(), Tally { a, b, proportion_a: a as f64 / n, proportion_b: b as f64 / n }))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanSummary {
    /// Mean aggregated rating per system (`"-"` when unlabeled).
    pub mean_rating: BTreeMap<String, f64>,
    pub items: BTreeMap<String, f64>,
    pub comparisons: BTreeMap<String, Tally>,
}

/// Aggregates rating and comparison records. Item ids are keyed as
/// `system/item` when a system is given.
pub fn summarize_human(ratings: &[RatingRecord<f64>], comparisons: &[ComparisonRecord]) -> Result<HumanSummary, EvalError> {
    let mut items = BTreeMap::new();
    let mut per_system: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in ratings {
        let v = aggregate_rating(&r.ratings).map_err(|e| EvalError::Argument(format!("{}: {e}", r.item_id)))?;
        let system = r.system.clone().unwrap_or_else(|| "-".into());
        let key = match &r.system {
            Some(s) => format!("{s}/{}", r.item_id),
            None => r.item_id.clone(),
        };
        if items.insert(key.clone(), v).is_some() {
            return Err(EvalError::Argument(format!("duplicate rating record {key}")));
        }
        per_system.entry(system).or_default().push(v);
    }
    let mut votes = BTreeMap::new();
    for c in comparisons {
        if votes.insert(c.pair_id.clone(), c.votes.clone()).is_some() {
            return Err(EvalError::Argument(format!("duplicate comparison record {}", c.pair_id)));
        }
    }
    Ok(HumanSummary {
        mean_rating: per_system
            .into_iter()
            .map(|(s, v)| (s, v.iter().sum::<f64>() / v.len() as f64))
            .collect(),
        items,
        comparisons: aggregate_comparison(&votes)?,
    })
}
