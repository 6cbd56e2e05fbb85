use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Transcript;
use crate::segmenter::Segment;

use super::{PromptError, SegmentCaption, SoundTagSet};

pub const SCENE_MARKER: &str = "Scene: ";
pub const DEFAULT_SPEAKER: &str = "Speaker 1";

pub const DEFAULT_HEADER: &str = "Please generate an explanation of why the following video is funny, \
as if you had watched it yourself. The video is described scene by scene. Each scene starts with a \
description of what can be seen, followed by what the people in it say. Sounds heard in the video are \
listed at the top.";

pub const DEFAULT_FOOTER: &str = "Explain why this video is funny in up to three sentences.";

/// Modalities removed from the prompt.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub visual: bool,
    pub speech: bool,
    pub sound: bool,
}

impl Ablation {
    pub fn all_removed(&self) -> bool {
        self.visual && self.speech && self.sound
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;

    /// Comma-separated subset of `v`, `t`, `a` (or `visual`, `speech`,
    /// `sound`); empty means nothing is removed.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut a = Ablation::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "v" | "visual" => a.visual = true,
                "t" | "speech" | "transcript" => a.speech = true,
                "a" | "sound" | "audio" => a.sound = true,
                other => return Err(format!("unknown modality {other:?} (expected v, t or a)")),
            }
        }
        Ok(a)
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.visual, "v"), (self.speech, "t"), (self.sound, "a")]
            .into_iter()
            .filter_map(|(on, s)| on.then_some(s))
            .collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerLine {
    pub speaker: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneBlock {
    /// Absent when the visual modality is removed.
    pub caption: Option<String>,
    pub lines: Vec<SpeakerLine>,
}

/// The rendered video-to-text prompt: header, optional sound tags, one
/// block per segment in time order, footer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDocument {
    pub header: String,
    pub sound_tags: Vec<String>,
    pub blocks: Vec<SceneBlock>,
    pub footer: String,
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl PromptDocument {
    /// Paragraphs separated by blank lines; ends with a newline.
    pub fn render(&self) -> String {
        let mut paragraphs = vec![self.header.trim().to_string()];
        if !self.sound_tags.is_empty() {
            paragraphs.push(format!("({})", self.sound_tags.join(", ")));
        }
        for block in &self.blocks {
            let mut lines = vec![match &block.caption {
                Some(c) => format!("{SCENE_MARKER}{c}"),
                None => SCENE_MARKER.trim_end().to_string(),
            }];
            lines.extend(block.lines.iter().map(|l| format!("{}: {}", l.speaker, l.text)));
            paragraphs.push(lines.join("\n"));
        }
        paragraphs.push(self.footer.trim().to_string());
        paragraphs.join("\n\n") + "\n"
    }

    /// Inverse of [`render`](Self::render) for documents whose header and
    /// footer are single paragraphs.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let paragraphs: Vec<&str> = text.trim_end_matches('\n').split("\n\n").collect();
        if paragraphs.len() < 2 {
            return Err(PromptError::Argument("prompt needs a header and a footer".into()));
        }
        let header = paragraphs[0].to_string();
        let footer = paragraphs[paragraphs.len() - 1].to_string();
        let mut body = &paragraphs[1..paragraphs.len() - 1];
        let mut sound_tags = Vec::new();
        if let Some(first) = body.first() {
            if let Some(inner) = first.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
                sound_tags = inner.split(", ").map(str::to_string).collect();
                body = &body[1..];
            }
        }
        let blocks = body
            .iter()
            .map(|para| {
                let mut lines = para.lines();
                let first = lines.next().unwrap_or("");
                let caption = if first == SCENE_MARKER.trim_end() {
                    None
                } else if let Some(c) = first.strip_prefix(SCENE_MARKER) {
                    Some(c.to_string())
                } else {
                    return Err(PromptError::Argument(format!("block does not start with the scene marker: {first:?}")));
                };
                let lines = lines
                    .map(|l| {
                        l.split_once(": ")
                            .map(|(s, t)| SpeakerLine { speaker: s.into(), text: t.into() })
                            .ok_or_else(|| PromptError::Argument(format!("malformed utterance line {l:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                Ok(SceneBlock { caption, lines })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { header, sound_tags, blocks, footer })
    }
}

impl fmt::Display for PromptDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Index of the segment containing `t`: the last one starting at or before
/// it, or the first segment for earlier times.
fn segment_for(segments: &[Segment<f64>], t: f64) -> usize {
    segments.iter().rposition(|s| s.start_s <= t).unwrap_or(0)
}

pub struct PromptParts<'a> {
    pub segments: &'a [Segment<f64>],
    pub captions: &'a [SegmentCaption],
    pub transcript: &'a Transcript,
    pub tags: &'a SoundTagSet,
    pub ablation: Ablation,
    pub header: &'a str,
    pub footer: &'a str,
}

/// Lays out captions, speaker lines and sound tags in segment order. Each
/// utterance goes to the segment containing its start time.
pub fn assemble_prompt(parts: &PromptParts<'_>) -> Result<PromptDocument, PromptError> {
    let ab = parts.ablation;
    if ab.all_removed() {
        return Err(PromptError::Argument("every modality is ablated".into()));
    }
    if parts.segments.is_empty() {
        return Err(PromptError::Argument("no segments".into()));
    }
    let mut order: Vec<usize> = (0..parts.segments.len()).collect();
    order.sort_by(|&a, &b| parts.segments[a].start_s.total_cmp(&parts.segments[b].start_s));
    let segments: Vec<Segment<f64>> = order.iter().map(|&i| parts.segments[i]).collect();

    let mut blocks: Vec<SceneBlock> = Vec::with_capacity(segments.len());
    for seg in &segments {
        let caption = if ab.visual {
            None
        } else {
            let c = parts
                .captions
                .iter()
                .find(|c| c.segment_index == seg.index)
                .ok_or_else(|| PromptError::Argument(format!("no caption for segment {}", seg.index)))?;
            Some(one_line(&c.caption))
        };
        blocks.push(SceneBlock { caption, lines: Vec::new() });
    }
    if !ab.speech {
        for u in &parts.transcript.utterances {
            let text = one_line(&u.text);
            if text.is_empty() {
                continue;
            }
            blocks[segment_for(&segments, u.start_s)].lines.push(SpeakerLine {
                speaker: u.speaker.clone().unwrap_or_else(|| DEFAULT_SPEAKER.into()),
                text,
            });
        }
    }
    let sound_tags = if ab.sound {
        Vec::new()
    } else {
        parts.tags.tags.iter().map(|t| one_line(&t.label)).collect()
    };
    Ok(PromptDocument {
        header: parts.header.to_string(),
        sound_tags,
        blocks,
        footer: parts.footer.to_string(),
    })
}
