use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::human::HumanSummary;
use super::moments::{Exclusion, RationaleEval, DEFAULT_TAUS};
use super::scores::{ScoreReport, RA_THRESHOLDS, SENTBERT_THRESHOLDS};
use super::taxonomy::TaxonomyRow;
use super::EvalError;

/// Machine-readable output of one `eval` run. Sections a run did not compute
/// are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub created_at: DateTime<Utc>,
    /// Label of the evaluated system (model, prompt configuration).
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentbert: Option<ScoreReport<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roscoe_ra: Option<ScoreReport<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<RationaleEval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<HumanSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taxonomy: Option<Vec<TaxonomyRow<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<Exclusion>,
}

impl EvalReport {
    pub fn new(system: impl Into<String>) -> Self {
        Self {
            created_at: Utc::now(),
            system: system.into(),
            sentbert: None,
            roscoe_ra: None,
            rationale: None,
            human: None,
            taxonomy: None,
            exclusions: Vec::new(),
        }
    }
}

const REPORT_PREFIX: &str = "eval-";

/// Writes `eval-<timestamp>.json` into `dir` and returns its path.
pub fn write_report(dir: &Path, report: &EvalReport) -> Result<PathBuf, EvalError> {
    let io = |e: std::io::Error| EvalError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let stamp = report.created_at.format("%Y%m%dT%H%M%S%.6fZ");
    let path = dir.join(format!("{REPORT_PREFIX}{stamp}.json"));
    let body = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&path, body + "\n").map_err(io)?;
    Ok(path)
}

/// The report in `dir` with the newest `created_at`; `None` if there is
/// none or the directory does not exist.
pub fn latest_report(dir: &Path) -> Result<Option<EvalReport>, EvalError> {
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(EvalError::Io(format!("{}: {e}", dir.display()))),
    };
    let mut best: Option<(DateTime<Utc>, PathBuf, EvalReport)> = None;
    for entry in entries {
        let path = entry.map_err(|e| EvalError::Io(e.to_string()))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !name.starts_with(REPORT_PREFIX) || !name.ends_with(".json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
        let report: EvalReport =
            serde_json::from_str(&text).map_err(|e| EvalError::Argument(format!("{}: {e}", path.display())))?;
        let newer = best
            .as_ref()
            .is_none_or(|(t, p, _)| (report.created_at, &path) > (*t, p));
        if newer {
            best = Some((report.created_at, path, report));
        }
    }
    Ok(best.map(|(_, _, r)| r))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

/// One row per report in the column layout: SentBERT mean and @0.7..@0.4,
/// ROSCOE-RA mean and @0.8/@0.7, rationale quality at τ 0.3 and 0.5, and the
/// mean human rating.
pub fn render_table2(reports: &[EvalReport]) -> String {
    let mut header = vec!["System".to_string(), "SentBERT Mean".to_string()];
    header.extend(SENTBERT_THRESHOLDS.iter().map(|k| format!("@{k}")));
    header.push("ROSCOE Mean".into());
    header.extend(RA_THRESHOLDS.iter().map(|k| format!("@{k}")));
    header.extend(DEFAULT_TAUS.iter().map(|t| format!("S(τ={t})")));
    header.push("Human".into());

    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![r.system.clone()];
        let score_cells = |rep: &Option<ScoreReport<f64>>, ks: &[f64], row: &mut Vec<String>| {
            row.push(cell(rep.as_ref().map(|s| s.mean)));
            row.extend(ks.iter().map(|&k| cell(rep.as_ref().and_then(|s| s.at(k)))));
        };
        score_cells(&r.sentbert, &SENTBERT_THRESHOLDS, &mut row);
        score_cells(&r.roscoe_ra, &RA_THRESHOLDS, &mut row);
        for &tau in &DEFAULT_TAUS {
            let s = r
                .rationale
                .as_ref()
                .and_then(|e| e.quality.iter().find(|q| q.tau == tau))
                .map(|q| q.s);
            row.push(cell(s));
        }
        let human = r.human.as_ref().and_then(|h| {
            h.mean_rating.get(&r.system).or_else(|| h.mean_rating.get("-")).copied()
        });
        row.push(cell(human));
        rows.push(row);
    }
    render_rows(&rows)
}

/// Category, count, share and mean score, most frequent first.
pub fn render_taxonomy(rows: &[TaxonomyRow<f64>]) -> String {
    let mut table = vec![vec!["Category".to_string(), "Count".into(), "Proportion".into(), "Mean SentBERT".into()]];
    table.extend(rows.iter().map(|r| {
        vec![r.category.clone(), r.count.to_string(), format!("{:.3}", r.proportion), format!("{:.3}", r.mean_score)]
    }));
    render_rows(&table)
}

fn render_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s:<w$}"))
            .collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
        }
    }
    out
}

/// Per-item scores keyed by id, as read from a predictions file.
pub type ItemScores = BTreeMap<String, f64>;
