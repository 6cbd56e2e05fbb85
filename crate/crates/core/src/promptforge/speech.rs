use std::sync::LazyLock;

use regex::Regex;
use tracing::warn;

use crate::backends::{Client, CompletionRequest, SPEAKER_TEMPERATURE};
use crate::corpus::Transcript;

use super::document::DEFAULT_SPEAKER;

static NUMBERED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^\s*(?:utterance\s*)?#?(\d+)\s*[:.)\-]\s*speaker\s*(\d+)\b").expect("valid regex")
});
static LABELED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?im)^\s*speaker\s*(\d+)\s*:").expect("valid regex"));

pub fn speaker_prompt(transcript: &Transcript) -> String {
    let mut p = String::from(
        "The following utterances were transcribed from a short video. Predict how many people are speaking \
and assign a speaker to each utterance. Answer with one line per utterance in the form \
\"<utterance number>: Speaker <k>\".\n\n",
    );
    for (i, u) in transcript.utterances.iter().enumerate() {
        p.push_str(&format!("{}. {}\n", i + 1, u.text.trim()));
    }
    p
}

/// Speaker number per utterance, or `None` unless the reply covers every
/// utterance with a number in `1..=n`.
pub fn parse_speaker_reply(reply: &str, n: usize) -> Option<Vec<usize>> {
    let valid = |k: usize| (1..=n).contains(&k);
    let mut numbered = vec![None; n];
    for c in NUMBERED.captures_iter(reply) {
        let (i, k): (usize, usize) = (c[1].parse().ok()?, c[2].parse().ok()?);
        if (1..=n).contains(&i) && valid(k) && numbered[i - 1].is_none() {
            numbered[i - 1] = Some(k);
        }
    }
    if let Some(all) = numbered.iter().copied().collect::<Option<Vec<_>>>() {
        return Some(all);
    }
    let labeled: Vec<usize> = LABELED
        .captures_iter(reply)
        .filter_map(|c| c[1].parse().ok())
        .collect();
    (labeled.len() == n && labeled.iter().all(|&k| valid(k))).then_some(labeled)
}

/// Labels every utterance `Speaker k`. A single utterance is always
/// speaker 1; an unusable reply labels everything speaker 1.
pub fn assign_speakers(transcript: &Transcript, client: &Client, endpoint: Option<&str>) -> Transcript {
    let n = transcript.utterances.len();
    let mut out = transcript.clone();
    let labels = if n <= 1 {
        vec![1; n]
    } else {
        let req = CompletionRequest::new(speaker_prompt(transcript), SPEAKER_TEMPERATURE);
        match client.complete_on(endpoint, &req) {
            Ok(reply) => parse_speaker_reply(&reply, n).unwrap_or_else(|| {
                warn!(reply = %reply, "speaker reply unparseable; labeling all utterances {DEFAULT_SPEAKER}");
                vec![1; n]
            }),
            Err(e) => {
                warn!(error = %e, "speaker assignment failed; labeling all utterances {DEFAULT_SPEAKER}");
                vec![1; n]
            }
        }
    };
    for (u, k) in out.utterances.iter_mut().zip(labels) {
        u.speaker = Some(format!("Speaker {k}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_numbered_lines() {
        let reply = "There are two speakers.\n1: Speaker 1\n2: Speaker 2\n3. speaker 1\n4) Speaker 2";
        assert_eq!(parse_speaker_reply(reply, 4), Some(vec![1, 2, 1, 2]));
    }

    #[test]
    fn parses_labeled_lines() {
        let reply = "Speaker 1: hi\nSpeaker 2: hello\nSpeaker 1: bye";
        assert_eq!(parse_speaker_reply(reply, 3), Some(vec![1, 2, 1]));
    }

    #[test]
    fn rejects_partial_or_out_of_range() {
        assert_eq!(parse_speaker_reply("1: Speaker 1", 2), None);
        assert_eq!(parse_speaker_reply("1: Speaker 1\n2: Speaker 3", 2), None);
        assert_eq!(parse_speaker_reply("no idea", 2), None);
    }
}
