use crate::backends::Client;
use crate::scalar::Scalar;

use super::EvalError;

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T, EvalError> {
    if u.len() != v.len() {
        return Err(EvalError::Argument(format!("cosine: dimension mismatch {} vs {}", u.len(), v.len())));
    }
    let dot: T = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
    let nu = u.iter().map(|&a| a * a).sum::<T>().sqrt();
    let nv = v.iter().map(|&b| b * b).sum::<T>().sqrt();
    if !(nu > T::zero() && nv > T::zero()) {
        return Err(EvalError::Argument("cosine: zero or non-finite vector".into()));
    }
    Ok((dot / (nu * nv)).max(-T::one()).min(T::one()))
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "approx", "no", "fig",
];

fn is_abbreviation(word: &str) -> bool {
    let w = word.trim_start_matches(|c: char| !c.is_alphanumeric()).trim_end_matches('.');
    let lower = w.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str()) || (w.chars().count() == 1 && w.chars().all(char::is_uppercase))
}

/// Splits on `.`, `!` or `?` followed by whitespace or end of text. Closing
/// quotes and brackets stay with their sentence; a period ending a known
/// abbreviation or a single-capital initial does not end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '.' | '!' | '?' | '"' | '\'' | ')' | ']' | '”' | '’') {
                end += 1;
            }
            let at_break = end == chars.len() || chars[end].is_whitespace();
            let word_start = chars[..i].iter().rposition(|c| c.is_whitespace()).map_or(0, |p| p + 1);
            let word: String = chars[word_start..=i].iter().collect();
            if at_break && !(chars[i] == '.' && is_abbreviation(&word)) {
                let s: String = chars[start..end].iter().collect::<String>().trim().to_string();
                if !s.is_empty() {
                    out.push(s);
                }
                start = end;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    let tail: String = chars[start..].iter().collect::<String>().trim().to_string();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// Mean over prediction sentences of the best cosine against any gold
/// sentence.
pub fn alignment_score<T: Scalar>(pred: &[Vec<T>], gold: &[Vec<T>]) -> Result<T, EvalError> {
    if pred.is_empty() || gold.is_empty() {
        return Err(EvalError::Argument("alignment: empty sentence list".into()));
    }
    let mut total = T::zero();
    for p in pred {
        let mut best = -T::infinity();
        for g in gold {
            best = best.max(cosine(p, g)?);
        }
        total = total + best;
    }
    Ok(total / T::from_count(pred.len()))
}

fn non_empty(pred: &str, gold: &str) -> Result<(), EvalError> {
    if pred.trim().is_empty() || gold.trim().is_empty() {
        return Err(EvalError::Argument("prediction and reference must be non-empty".into()));
    }
    Ok(())
}

/// Cosine between whole-text embeddings of prediction and reference.
pub fn sentbert_score(pred: &str, gold: &str, client: &Client) -> Result<f64, EvalError> {
    non_empty(pred, gold)?;
    let v = client.embed(&[pred.to_string(), gold.to_string()])?;
    cosine(&v[0], &v[1])
}

/// Sentence-level reasoning alignment between prediction and reference.
pub fn ra_score(pred: &str, gold: &str, client: &Client) -> Result<f64, EvalError> {
    non_empty(pred, gold)?;
    let p = split_sentences(pred);
    let g = split_sentences(gold);
    let texts: Vec<String> = p.iter().chain(&g).cloned().collect();
    let mut vectors = client.embed(&texts)?;
    let gv = vectors.split_off(p.len());
    alignment_score(&vectors, &gv)
}
