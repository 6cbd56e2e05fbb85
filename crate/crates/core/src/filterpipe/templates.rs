use std::path::Path;

use crate::corpus::Transcript;

// Paraphrases of the filtering prompts; operators can override each file in
// the config directory.
const STEP_B: &str = "You are given a caption describing the visual content of a short video and the transcript of its speech.

Video caption: {caption}

Transcript:
{transcript}

Taking both the caption and the transcript into account, is any utterance funny? If so, quote the funniest utterance exactly as it appears in the transcript. If none of the utterances are funny, answer \"None\".";

const STEP_C: &str = "You are given the transcript of the speech in a short video.

Transcript:
{transcript}

Is any utterance funny? If so, quote the funniest utterance exactly as it appears in the transcript. If none of the utterances are funny, answer \"None\".";

const STEP_D_WITH_CAPTION: &str = "You are given a caption describing the visual content of a short video and the transcript of its speech.

Video caption: {caption}

Transcript:
{transcript}

Explain in one sentence why this video is funny.";

const STEP_D_TRANSCRIPT_ONLY: &str = "You are given the transcript of the speech in a short video.

Transcript:
{transcript}

Explain in one sentence why this video is funny.";

/// Prompt templates with `{caption}` and `{transcript}` placeholders.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterTemplates {
    pub step_b: String,
    pub step_c: String,
    pub step_d_with_caption: String,
    pub step_d_transcript_only: String,
}

impl Default for FilterTemplates {
    fn default() -> Self {
        Self {
            step_b: STEP_B.into(),
            step_c: STEP_C.into(),
            step_d_with_caption: STEP_D_WITH_CAPTION.into(),
            step_d_transcript_only: STEP_D_TRANSCRIPT_ONLY.into(),
        }
    }
}

impl FilterTemplates {
    pub const FILE_NAMES: [&'static str; 4] = [
        "step_b.txt",
        "step_c.txt",
        "step_d_with_caption.txt",
        "step_d_transcript_only.txt",
    ];

    /// Defaults, overridden by whichever template files exist in `dir`.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut t = Self::default();
        let slots = [
            &mut t.step_b,
            &mut t.step_c,
            &mut t.step_d_with_caption,
            &mut t.step_d_transcript_only,
        ];
        for (slot, name) in slots.into_iter().zip(Self::FILE_NAMES) {
            let path = dir.join(name);
            if path.is_file() {
                *slot = std::fs::read_to_string(&path)?.trim_end().to_string();
            }
        }
        Ok(t)
    }
}

/// Numbered transcript lines, one utterance per line.
pub fn render_transcript(transcript: &Transcript) -> String {
    transcript
        .utterances
        .iter()
        .enumerate()
        .map(|(i, u)| match &u.speaker {
            Some(s) => format!("{}. {s}: {}", i + 1, u.text.trim()),
            None => format!("{}. {}", i + 1, u.text.trim()),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn fill(template: &str, caption: Option<&str>, transcript: &Transcript) -> String {
    let mut out = template.replace("{transcript}", &render_transcript(transcript));
    if let Some(c) = caption {
        out = out.replace("{caption}", c.trim());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;

    #[test]
    fn fills_placeholders() {
        let t = Transcript::new("en", vec![Utterance::new(0.0, 1.0, "Hi"), Utterance::new(1.0, 2.0, "Bye")]);
        let p = fill(&FilterTemplates::default().step_b, Some("a cat"), &t);
        assert!(p.contains("Video caption: a cat"));
        assert!(p.contains("1. Hi\n2. Bye"));
        let p = fill(&FilterTemplates::default().step_c, None, &t);
        assert!(!p.contains("{caption}") && !p.contains("a cat"));
    }

    #[test]
    fn dir_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("step_c.txt"), "custom {transcript}\n").unwrap();
        let t = FilterTemplates::from_dir(dir.path()).unwrap();
        assert_eq!(t.step_c, "custom {transcript}");
        assert_eq!(t.step_b, FilterTemplates::default().step_b);
    }
}
