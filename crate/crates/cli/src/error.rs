use std::fmt;
use std::path::Path;

use vidhumor::backends::BackendError;
use vidhumor::corpus::{CorpusError, StoreError};
use vidhumor::evalkit::EvalError;
use vidhumor::filterpipe::FilterError;
use vidhumor::promptforge::PromptError;
use vidhumor::segmenter::SegmentError;
use vidhumor_service::ServiceError;

/// Failure reported as `error[<category>]: <message>` with exit status 1.
#[derive(Debug)]
pub struct CliError {
    pub category: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(category: &'static str, message: impl Into<String>) -> Self {
        Self { category, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn argument(message: impl Into<String>) -> Self {
        Self::new("argument", message)
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new("io", format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category, self.message)
    }
}

macro_rules! categorized {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.category(), e.to_string())
            }
        }
    )*};
}

categorized!(BackendError, CorpusError, StoreError, EvalError, FilterError, PromptError, SegmentError, ServiceError);
