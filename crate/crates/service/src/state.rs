use std::path::PathBuf;
use std::sync::{Arc, RwLock, RwLockReadGuard};

use vidhumor::corpus::{event_log_path, ingest_manifest, CorpusState, EventLog, PipelineEvent, PipelineState, StoreError};
use vidhumor::corpus::CorpusError;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub manifest: PathBuf,
    pub media_root: PathBuf,
    /// Directory holding `eval` reports.
    pub reports_dir: PathBuf,
    /// Static review UI to serve at `/`, if built.
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl ServiceError {
    pub fn category(&self) -> &'static str {
        match self {
            ServiceError::Corpus(e) => e.category(),
            ServiceError::Store(e) => e.category(),
        }
    }
}

struct Inner {
    config: ServiceConfig,
    log: EventLog,
    corpus: RwLock<CorpusState>,
}

/// Shared service state. Reads take the lock shared; every mutation holds
/// it exclusively across validation, log append and apply.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Loads the manifest and replays its event log.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        let records = ingest_manifest(&config.manifest)?;
        let log_path = event_log_path(&config.manifest);
        let events = EventLog::replay(&log_path)?;
        let corpus = CorpusState::replayed(records, &events)?;
        let log = EventLog::open(&log_path)?;
        Ok(Self(Arc::new(Inner {
            config,
            log,
            corpus: RwLock::new(corpus),
        })))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    pub fn read(&self) -> RwLockReadGuard<'_, CorpusState> {
        self.0.corpus.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn commit(&self, event: PipelineEvent) -> Result<PipelineState, StoreError> {
        let mut corpus = self.0.corpus.write().unwrap_or_else(|p| p.into_inner());
        corpus.commit(&self.0.log, event)
    }
}
