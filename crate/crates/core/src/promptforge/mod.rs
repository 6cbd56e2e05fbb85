//! Video-to-text prompt construction: per-segment captions, speaker-labeled
//! transcript and sound tags laid out scene by scene.

mod document;
mod sound;
mod speech;
mod visual;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, Client, CompletionRequest, MediaRef};
use crate::corpus::{Transcript, VideoRecord};
use crate::filterpipe::{obtain_transcript, FilterError};
use crate::segmenter::{self, FrameIndex, Segment, SegmentError};

pub use document::{
    assemble_prompt, Ablation, PromptDocument, PromptParts, SceneBlock, SpeakerLine, DEFAULT_FOOTER, DEFAULT_HEADER,
    DEFAULT_SPEAKER, SCENE_MARKER,
};
pub use sound::{collect_sound_tags, SoundTagSet, MAX_TAGS, TAG_THRESHOLD};
pub use speech::{assign_speakers, parse_speaker_reply, speaker_prompt};
pub use visual::{build_caption_corpus, frame_ref, frame_times, segment_ref, select_segment_caption, SegmentCaption};

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_FPS: f64 = 5.0;
pub const DEFAULT_CAPTION_PROMPT: &str = "Who is doing what?";
pub const EXPLANATION_SENTENCES: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("{0}")]
    Argument(String),
    #[error("media error for {id:?}: {message}")]
    Media { id: String, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("empty completion")]
    EmptyCompletion,
}

impl PromptError {
    pub fn category(&self) -> &'static str {
        match self {
            PromptError::Argument(_) => "argument",
            PromptError::Media { .. } => "media",
            PromptError::Backend(e) => e.category(),
            PromptError::EmptyCompletion => "backend",
        }
    }
}

impl From<FilterError> for PromptError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::Backend(b) => PromptError::Backend(b),
            FilterError::Media { id, message } => PromptError::Media { id, message },
            FilterError::State(s) => PromptError::Argument(s.to_string()),
        }
    }
}

fn segment_error(id: &str, e: SegmentError) -> PromptError {
    match e {
        SegmentError::Argument(m) => PromptError::Argument(format!("{id}: {m}")),
        SegmentError::Media { path, message } => PromptError::Media {
            id: id.to_string(),
            message: format!("{}: {message}", path.display()),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub k: usize,
    pub fps: f64,
    pub caption_prompt: String,
    pub shot_threshold: f64,
    pub min_scene_s: f64,
    pub ablation: Ablation,
    pub header: String,
    pub footer: String,
    /// Completion endpoint for speaker assignment.
    pub speaker_endpoint: Option<String>,
    pub media_root: PathBuf,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            fps: DEFAULT_FPS,
            caption_prompt: DEFAULT_CAPTION_PROMPT.into(),
            shot_threshold: segmenter::DEFAULT_THRESHOLD,
            min_scene_s: segmenter::DEFAULT_MIN_SCENE_S,
            ablation: Ablation::default(),
            header: DEFAULT_HEADER.into(),
            footer: DEFAULT_FOOTER.into(),
            speaker_endpoint: None,
            media_root: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMeta {
    #[serde(flatten)]
    pub segment: Segment<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caption: Option<SegmentCaption>,
}

/// Everything that went into one prompt, written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub video_id: String,
    pub ablation: Ablation,
    pub k: usize,
    pub fps: f64,
    pub segments: Vec<SegmentMeta>,
    pub transcript: Transcript,
    pub sound_tags: SoundTagSet,
    pub prompt_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBuild {
    pub document: PromptDocument,
    pub metadata: BuildMetadata,
}

/// Segments a video from its frame features and utterance starts.
pub fn segment_video(record: &VideoRecord, transcript: &Transcript, cfg: &PromptConfig) -> Result<Vec<Segment<f64>>, PromptError> {
    let frames_dir = record.media.resolved(&cfg.media_root).frames_dir;
    let features = segmenter::load_features(&frames_dir).map_err(|e| segment_error(&record.id, e))?;
    let shots = segmenter::detect_shots(&features, cfg.shot_threshold, cfg.min_scene_s)
        .map_err(|e| segment_error(&record.id, e))?;
    Ok(segmenter::refine_with_utterances(&shots, transcript, record.duration_s))
}

/// Runs segmentation, captioning, speaker assignment and tagging for the
/// enabled modalities, then assembles the prompt.
pub fn build_prompt(record: &VideoRecord, client: &Client, cfg: &PromptConfig) -> Result<PromptBuild, PromptError> {
    if cfg.ablation.all_removed() {
        return Err(PromptError::Argument("every modality is ablated".into()));
    }
    let media = record.media.resolved(&cfg.media_root);
    let raw_transcript = obtain_transcript(record, &cfg.media_root, client)?;
    let segments = segment_video(record, &raw_transcript, cfg)?;

    let mut captions = Vec::new();
    if !cfg.ablation.visual {
        let index = FrameIndex::open(&media.frames_dir).map_err(|e| segment_error(&record.id, e))?;
        for seg in &segments {
            let corpus = build_caption_corpus(&record.id, seg, &index, client, &cfg.caption_prompt, cfg.k, cfg.fps)?;
            captions.push(select_segment_caption(&record.id, seg, &corpus, &media.frames_dir, client)?);
        }
    }
    let transcript = if cfg.ablation.speech {
        raw_transcript
    } else {
        assign_speakers(&raw_transcript, client, cfg.speaker_endpoint.as_deref())
    };
    let tags = if cfg.ablation.sound {
        SoundTagSet::default()
    } else {
        collect_sound_tags(&MediaRef::new(&record.id).with_path(&media.audio), client)?
    };
    let document = assemble_prompt(&PromptParts {
        segments: &segments,
        captions: &captions,
        transcript: &transcript,
        tags: &tags,
        ablation: cfg.ablation,
        header: &cfg.header,
        footer: &cfg.footer,
    })?;
    let metadata = BuildMetadata {
        video_id: record.id.clone(),
        ablation: cfg.ablation,
        k: cfg.k,
        fps: cfg.fps,
        segments: segments
            .iter()
            .map(|s| SegmentMeta {
                segment: *s,
                caption: captions.iter().find(|c| c.segment_index == s.index).cloned(),
            })
            .collect(),
        transcript,
        sound_tags: tags,
        prompt_sha256: crate::backends::prompt_key(&document.render()),
    };
    Ok(PromptBuild { document, metadata })
}

/// One completion at the explanation temperature; the reply is returned
/// verbatim.
pub fn explain(prompt: &str, client: &Client, endpoint: Option<&str>) -> Result<String, PromptError> {
    let reply = client.complete_on(endpoint, &CompletionRequest::explanation(prompt, EXPLANATION_SENTENCES))?;
    if reply.trim().is_empty() {
        return Err(PromptError::EmptyCompletion);
    }
    Ok(reply)
}
