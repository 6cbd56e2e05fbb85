use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::{Client, CompletionRequest};
use crate::filterpipe::normalize_text;
use crate::scalar::Scalar;

use super::EvalError;

pub const UNCLASSIFIED: &str = "unclassified";
/// Sampling temperature for the classification call.
pub const CLASSIFY_TEMPERATURE: f64 = 0.3;

const DEFAULT_TAXONOMY: &str = include_str!("../../assets/taxonomy.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub description: String,
    pub example: String,
}

/// The shipped 20-category humor taxonomy.
pub fn default_categories() -> Vec<Category> {
    serde_json::from_str(DEFAULT_TAXONOMY).expect("bundled taxonomy parses")
}

pub fn load_categories(path: &Path) -> Result<Vec<Category>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Argument(format!("{}: {e}", path.display())))?;
    let cats: Vec<Category> =
        serde_json::from_str(&text).map_err(|e| EvalError::Argument(format!("{}: {e}", path.display())))?;
    if cats.is_empty() {
        return Err(EvalError::Argument(format!("{}: no categories", path.display())));
    }
    Ok(cats)
}

pub fn classification_prompt(explanation: &str, categories: &[Category]) -> String {
    let mut p = String::from("Classify the humor described below into exactly one of these categories.\n\n");
    for (i, c) in categories.iter().enumerate() {
        p.push_str(&format!("{}. {}: {} Example: {}\n", i + 1, c.name, c.description.trim(), c.example.trim()));
    }
    p.push_str(&format!("\nExplanation: {}\n\nAnswer with the category name only.", explanation.trim()));
    p
}

/// Maps a reply to a category name. An exact (normalized) match wins;
/// otherwise the category mentioned earliest, longest name first on ties.
pub fn match_category(reply: &str, categories: &[Category]) -> String {
    let norm = normalize_text(reply);
    if let Some(c) = categories.iter().find(|c| normalize_text(&c.name) == norm) {
        return c.name.clone();
    }
    let padded = format!(" {norm} ");
    categories
        .iter()
        .filter_map(|c| {
            let name = normalize_text(&c.name);
            if name.is_empty() {
                return None;
            }
            padded.find(&format!(" {name} ")).map(|pos| (pos, std::cmp::Reverse(name.len()), c))
        })
        .min_by_key(|(pos, len, _)| (*pos, *len))
        .map_or_else(|| UNCLASSIFIED.to_string(), |(_, _, c)| c.name.clone())
}

pub fn classify_taxonomy(
    explanation: &str,
    categories: &[Category],
    client: &Client,
    endpoint: Option<&str>,
) -> Result<String, EvalError> {
    if categories.is_empty() {
        return Err(EvalError::Argument("no taxonomy categories".into()));
    }
    let req = CompletionRequest::new(classification_prompt(explanation, categories), CLASSIFY_TEMPERATURE);
    let reply = client.complete_on(endpoint, &req)?;
    Ok(match_category(&reply, categories))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyRow<T> {
    pub category: String,
    pub count: usize,
    pub proportion: T,
    pub mean_score: T,
}

/// Per-category count, share and mean score, most frequent first (ties by
/// name).
pub fn taxonomy_report<T: Scalar>(
    classifications: &BTreeMap<String, String>,
    scores: &BTreeMap<String, T>,
) -> Result<Vec<TaxonomyRow<T>>, EvalError> {
    let mut groups: BTreeMap<&str, Vec<T>> = BTreeMap::new();
    for (id, cat) in classifications {
        let s = scores
            .get(id)
            .ok_or_else(|| EvalError::Argument(format!("{id}: classified item has no score")))?;
        groups.entry(cat.as_str()).or_default().push(*s);
    }
    let n = T::from_count(classifications.len());
    let mut rows: Vec<TaxonomyRow<T>> = groups
        .into_iter()
        .map(|(cat, v)| TaxonomyRow {
            category: cat.to_string(),
            count: v.len(),
            proportion: T::from_count(v.len()) / n,
            mean_score: v.iter().copied().sum::<T>() / T::from_count(v.len()),
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.category.cmp(&b.category)));
    Ok(rows)
}
