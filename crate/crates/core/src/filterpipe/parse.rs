use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::Transcript;

static QUOTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#""([^"]+)"|“([^”]+)”"#).expect("valid regex"));

/// Lowercases, turns punctuation into spaces and collapses whitespace.
pub fn normalize_text(s: &str) -> String {
    let mapped: String = s
        .chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn contains_words(haystack: &str, needle: &str) -> bool {
    format!(" {haystack} ").contains(&format!(" {needle} "))
}

/// Finds the transcript utterance a completion reply identifies as funny.
///
/// Quoted spans in the reply are tried first (an utterance containing the
/// quote, or contained in it). Otherwise the longest utterance whose
/// normalized text occurs in the normalized reply wins. `None` when nothing
/// matches.
pub fn match_funny_utterance(reply: &str, transcript: &Transcript) -> Option<usize> {
    let utterances: Vec<String> = transcript.utterances.iter().map(|u| normalize_text(&u.text)).collect();

    for caps in QUOTED.captures_iter(reply) {
        let quote = caps.get(1).or_else(|| caps.get(2)).map(|m| normalize_text(m.as_str()));
        let Some(quote) = quote.filter(|q| !q.is_empty()) else {
            continue;
        };
        if let Some(i) = utterances
            .iter()
            .position(|u| !u.is_empty() && (contains_words(u, &quote) || contains_words(&quote, u)))
        {
            return Some(i);
        }
    }

    let reply = normalize_text(reply);
    let mut best: Option<usize> = None;
    for (i, u) in utterances.iter().enumerate() {
        if u.is_empty() || !contains_words(&reply, u) {
            continue;
        }
        if best.is_none_or(|b| u.len() > utterances[b].len()) {
            best = Some(i);
        }
    }
    best
}
