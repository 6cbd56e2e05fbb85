use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{validate_annotations, CorpusError, PipelineState, VideoRecord};

/// Parses line-delimited JSON records. Blank lines are skipped; line numbers
/// in errors are 1-based. Duplicate ids are rejected, annotations are not
/// validated.
pub fn parse_manifest<R: BufRead>(reader: R) -> Result<Vec<VideoRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: VideoRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        record.state = PipelineState::Ingested;
        if let Some(&first_line) = seen.get(&record.id) {
            return Err(CorpusError::DuplicateId {
                id: record.id,
                first_line,
                line: line_no,
            });
        }
        seen.insert(record.id.clone(), line_no);
        records.push(record);
    }
    Ok(records)
}

/// Reads a manifest without validating annotations.
pub fn read_manifest(path: &Path) -> Result<Vec<VideoRecord>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_manifest(BufReader::new(file))
}

/// Reads a manifest and rejects the first record that violates an
/// annotation invariant.
pub fn ingest_manifest(path: &Path) -> Result<Vec<VideoRecord>, CorpusError> {
    let records = read_manifest(path)?;
    for record in &records {
        let violations = validate_annotations(record);
        if !violations.is_empty() {
            return Err(CorpusError::Validation {
                id: record.id.clone(),
                violations,
            });
        }
    }
    Ok(records)
}

pub fn write_manifest(path: &Path, records: &[VideoRecord]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}
