pub mod corpus;
pub mod eval;
pub mod pipeline;
pub mod serve;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
}

/// One JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line)
            .map_err(|e| CliError::new("parse", format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("value serializes");
        writeln!(out, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    out.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, body + "\n").map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Reports per-item failures on stderr and turns them into one error
/// carrying the first failure's category. Successful items were already
/// written by the caller.
pub fn check_failures(what: &str, total: usize, failures: Vec<(String, CliError)>) -> Result<(), CliError> {
    let Some((_, first)) = failures.first() else {
        return Ok(());
    };
    let category = first.category;
    for (id, e) in &failures {
        eprintln!("warning: {id}: [{}] {}", e.category, e.message);
    }
    Err(CliError::new(
        category,
        format!("{} of {total} {what} failed; rerun to retry them", failures.len()),
    ))
}
