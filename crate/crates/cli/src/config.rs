use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vidhumor::backends::{BackendKind, Client, EndpointConfig};
use vidhumor::evalkit::{DEFAULT_TAUS, RA_THRESHOLDS, SENTBERT_THRESHOLDS};
use vidhumor::filterpipe::{FilterConfig, FilterTemplates, DEFAULT_DIVERGENCE_THRESHOLD, DEFAULT_VIDEO_CAPTION_PROMPT};
use vidhumor::promptforge::{self, Ablation, PromptConfig};

use crate::error::CliError;

/// Prefix of every environment override.
pub const ENV_PREFIX: &str = "VIDHUMOR_";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Per-kind endpoints; the `default` entry covers unlisted kinds.
    pub backends: BTreeMap<String, EndpointConfig>,
    /// Extra completion endpoints addressed by name.
    pub completion: BTreeMap<String, EndpointConfig>,
    pub filter: FilterSection,
    pub prompt: PromptSection,
    pub explain: ExplainSection,
    pub eval: EvalSection,
    pub paths: PathsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub divergence_threshold: f64,
    pub templates_dir: Option<PathBuf>,
    pub video_caption_prompt: String,
    pub completion_endpoint: Option<String>,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            templates_dir: None,
            video_caption_prompt: DEFAULT_VIDEO_CAPTION_PROMPT.into(),
            completion_endpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSection {
    pub k: usize,
    pub fps: f64,
    /// Comma-separated modalities to remove (`v`, `t`, `a`).
    pub ablation: String,
    pub caption_prompt: String,
    pub shot_threshold: f64,
    pub min_scene_s: f64,
    pub header: Option<String>,
    pub footer: Option<String>,
    pub speaker_endpoint: Option<String>,
}

impl Default for PromptSection {
    fn default() -> Self {
        let d = PromptConfig::default();
        Self {
            k: d.k,
            fps: d.fps,
            ablation: String::new(),
            caption_prompt: d.caption_prompt,
            shot_threshold: d.shot_threshold,
            min_scene_s: d.min_scene_s,
            header: None,
            footer: None,
            speaker_endpoint: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub sentbert_thresholds: Vec<f64>,
    pub ra_thresholds: Vec<f64>,
    pub taus: Vec<f64>,
    pub categories: Option<PathBuf>,
    pub classify_endpoint: Option<String>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            sentbert_thresholds: SENTBERT_THRESHOLDS.to_vec(),
            ra_thresholds: RA_THRESHOLDS.to_vec(),
            taus: DEFAULT_TAUS.to_vec(),
            categories: None,
            classify_endpoint: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    /// Base of relative media paths; defaults to the manifest's directory.
    pub media_root: Option<PathBuf>,
    /// Where `eval` writes reports; defaults to `reports/` beside the manifest.
    pub reports_dir: Option<PathBuf>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_url(base: &Path, ep: &mut EndpointConfig) {
    if let Some(rest) = ep.base_url.strip_prefix("mock:") {
        let mut p = PathBuf::from(rest);
        resolve(base, &mut p);
        ep.base_url = format!("mock:{}", p.display());
    }
}

fn env_key(kind: &str) -> String {
    format!("{ENV_PREFIX}BACKEND_{}_URL", kind.to_ascii_uppercase())
}

impl RunConfig {
    /// Reads the TOML file (or defaults), applies environment overrides and
    /// resolves relative paths against the file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let (mut cfg, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                let cfg: RunConfig =
                    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                (cfg, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        for ep in cfg.backends.values_mut().chain(cfg.completion.values_mut()) {
            resolve_url(&base, ep);
        }
        for p in [&mut cfg.filter.templates_dir, &mut cfg.eval.categories, &mut cfg.paths.media_root, &mut cfg.paths.reports_dir]
            .into_iter()
            .flatten()
        {
            resolve(&base, p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// `VIDHUMOR_BACKEND_URL` sets the default endpoint,
    /// `VIDHUMOR_BACKEND_<KIND>_URL` one kind; `VIDHUMOR_DIVERGENCE_THRESHOLD`,
    /// `VIDHUMOR_MEDIA_ROOT` and `VIDHUMOR_REPORTS_DIR` override their keys.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), CliError> {
        if let Some(url) = get(&format!("{ENV_PREFIX}BACKEND_URL")) {
            self.backends.entry("default".into()).or_default().base_url = url;
        }
        for kind in BackendKind::ALL {
            if let Some(url) = get(&env_key(kind.as_str())) {
                self.backends.entry(kind.as_str().into()).or_default().base_url = url;
            }
        }
        if let Some(v) = get(&format!("{ENV_PREFIX}DIVERGENCE_THRESHOLD")) {
            self.filter.divergence_threshold = v
                .parse()
                .map_err(|_| CliError::config(format!("{ENV_PREFIX}DIVERGENCE_THRESHOLD: not a number: {v:?}")))?;
        }
        if let Some(v) = get(&format!("{ENV_PREFIX}MEDIA_ROOT")) {
            self.paths.media_root = Some(v.into());
        }
        if let Some(v) = get(&format!("{ENV_PREFIX}REPORTS_DIR")) {
            self.paths.reports_dir = Some(v.into());
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (name, ep) in &self.backends {
            if name != "default" && name.parse::<BackendKind>().is_err() {
                return Err(CliError::config(format!("unknown backend kind [backends.{name}]")));
            }
            check_endpoint(&format!("backends.{name}"), ep)?;
        }
        for (name, ep) in &self.completion {
            check_endpoint(&format!("completion.{name}"), ep)?;
        }
        let t = self.filter.divergence_threshold;
        if !(-1.0..=1.0).contains(&t) {
            return Err(CliError::config(format!("filter.divergence_threshold must lie in [-1, 1], got {t}")));
        }
        if self.prompt.k < 1 {
            return Err(CliError::config("prompt.k must be at least 1"));
        }
        if !(self.prompt.fps > 0.0) {
            return Err(CliError::config(format!("prompt.fps must be positive, got {}", self.prompt.fps)));
        }
        self.ablation()?;
        for (key, values, lo) in [
            ("eval.sentbert_thresholds", &self.eval.sentbert_thresholds, -1.0),
            ("eval.ra_thresholds", &self.eval.ra_thresholds, -1.0),
            ("eval.taus", &self.eval.taus, 0.0),
        ] {
            if let Some(v) = values.iter().find(|v| !(lo..=1.0).contains(*v)) {
                return Err(CliError::config(format!("{key} values must lie in [{lo}, 1], got {v}")));
            }
        }
        for (key, path) in [("filter.templates_dir", &self.filter.templates_dir), ("eval.categories", &self.eval.categories)] {
            if let Some(p) = path.as_ref().filter(|p| !p.exists()) {
                return Err(CliError::config(format!("{key}: {} does not exist", p.display())));
            }
        }
        for name in [&self.filter.completion_endpoint, &self.prompt.speaker_endpoint, &self.explain.endpoint, &self.eval.classify_endpoint]
            .into_iter()
            .flatten()
        {
            if !self.completion.contains_key(name) {
                return Err(CliError::config(format!("completion endpoint {name:?} is not configured")));
            }
        }
        Ok(())
    }

    pub fn ablation(&self) -> Result<Ablation, CliError> {
        self.prompt.ablation.parse().map_err(|e: String| CliError::config(format!("prompt.ablation: {e}")))
    }

    /// Client with one endpoint per configured kind.
    pub fn client(&self) -> Result<Client, CliError> {
        let mut client = Client::new();
        for kind in BackendKind::ALL {
            let ep = self.backends.get(kind.as_str()).or_else(|| self.backends.get("default"));
            if let Some(ep) = ep {
                client = client.with_endpoint(kind, ep.connect()?);
            }
        }
        for (name, ep) in &self.completion {
            client = client.with_named_completion(name.clone(), ep.connect()?);
        }
        Ok(client)
    }

    pub fn media_root(&self, manifest: &Path) -> PathBuf {
        self.paths
            .media_root
            .clone()
            .unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default())
    }

    pub fn reports_dir(&self, manifest: &Path) -> PathBuf {
        self.paths
            .reports_dir
            .clone()
            .unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default().join("reports"))
    }

    pub fn filter_config(&self, manifest: &Path) -> Result<FilterConfig, CliError> {
        let templates = match &self.filter.templates_dir {
            Some(dir) => FilterTemplates::from_dir(dir).map_err(|e| CliError::io(dir, e))?,
            None => FilterTemplates::default(),
        };
        Ok(FilterConfig {
            divergence_threshold: self.filter.divergence_threshold,
            templates,
            video_caption_prompt: self.filter.video_caption_prompt.clone(),
            media_root: self.media_root(manifest),
            completion_endpoint: self.filter.completion_endpoint.clone(),
        })
    }

    pub fn prompt_config(&self, manifest: &Path) -> Result<PromptConfig, CliError> {
        let p = &self.prompt;
        Ok(PromptConfig {
            k: p.k,
            fps: p.fps,
            caption_prompt: p.caption_prompt.clone(),
            shot_threshold: p.shot_threshold,
            min_scene_s: p.min_scene_s,
            ablation: self.ablation()?,
            header: p.header.clone().unwrap_or_else(|| promptforge::DEFAULT_HEADER.into()),
            footer: p.footer.clone().unwrap_or_else(|| promptforge::DEFAULT_FOOTER.into()),
            speaker_endpoint: p.speaker_endpoint.clone(),
            media_root: self.media_root(manifest),
        })
    }
}

fn check_endpoint(key: &str, ep: &EndpointConfig) -> Result<(), CliError> {
    ep.validate().map_err(|e| CliError::config(format!("{key}: {e}")))?;
    if let Some(p) = ep.base_url.strip_prefix("mock:") {
        if !Path::new(p).is_file() {
            return Err(CliError::config(format!("{key}: fixture {p} does not exist")));
        }
    } else if !(ep.base_url.starts_with("http://") || ep.base_url.starts_with("https://")) {
        return Err(CliError::config(format!("{key}: base_url must be http(s):// or mock:<path>, got {:?}", ep.base_url)));
    }
    Ok(())
}
