use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::Utc;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vidhumor::corpus::{event_log_path, ingest_manifest, CorpusState, EventLog, FilterStage, PipelineEvent, PipelineState};
use vidhumor::filterpipe::{evaluate_filter, FilterDecision, FilterOutcome, FilterVerdict};
use vidhumor::promptforge::{build_prompt, explain as explain_prompt};

use super::{check_failures, create_dir, write_json, write_jsonl, Context};
use crate::error::CliError;
use crate::{ExplainArgs, FilterArgs, PromptArgs};

pub const PROMPT_SUFFIX: &str = ".prompt.txt";
pub const META_SUFFIX: &str = ".meta.json";
pub const EXPLANATION_SUFFIX: &str = ".explanation.txt";
pub const EXPLANATIONS_FILE: &str = "explanations.jsonl";

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub explanation: String,
}

/// Manifest records with their state replayed from the event log.
pub fn load_state(manifest: &Path) -> Result<(CorpusState, PathBuf), CliError> {
    let records = ingest_manifest(manifest)?;
    let log_path = event_log_path(manifest);
    let events = EventLog::replay(&log_path)?;
    Ok((CorpusState::replayed(records, &events)?, log_path))
}

fn default_verdicts_path(manifest: &Path) -> PathBuf {
    let stem = manifest.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    manifest.with_file_name(format!("{stem}.verdicts.jsonl"))
}

pub fn filter(ctx: &Context, args: FilterArgs) -> Result<(), CliError> {
    let (mut state, log_path) = load_state(&args.manifest)?;
    let cfg = ctx.cfg.filter_config(&args.manifest)?;
    let client = ctx.cfg.client()?;
    let limit = args.stage_limit.unwrap_or(FilterStage::DDivergence);

    let pending: Vec<_> = state.records().iter().filter(|r| r.state == PipelineState::Ingested).cloned().collect();
    let skipped = state.records().len() - pending.len();
    let results: Vec<_> = pending
        .par_iter()
        .map(|r| (r.id.clone(), evaluate_filter(r, &client, &cfg, limit)))
        .collect();

    let mut verdicts: Vec<FilterVerdict> = Vec::new();
    let mut undecided = 0;
    let mut failures = Vec::new();
    for (id, res) in results {
        match res {
            Ok(FilterOutcome::Verdict(v)) => verdicts.push(v),
            Ok(FilterOutcome::Undecided { .. }) => undecided += 1,
            Err(e) => failures.push((id, CliError::from(e))),
        }
    }

    if !args.dry_run {
        let out = args.out.clone().unwrap_or_else(|| default_verdicts_path(&args.manifest));
        write_jsonl(&out, &verdicts)?;
        let log = EventLog::open(&log_path)?;
        for v in &verdicts {
            state.commit(&log, PipelineEvent::Filter(v.clone()))?;
            if v.decision == FilterDecision::Accept {
                let at = Utc::now();
                state.commit(&log, PipelineEvent::TriageEnqueue { video_id: v.video_id.clone(), at })?;
            }
        }
    } else if let Some(out) = &args.out {
        write_jsonl(out, &verdicts)?;
    }

    print_filter_summary(&verdicts, undecided, skipped, failures.len());
    check_failures("videos", pending.len(), failures)
}

fn print_filter_summary(verdicts: &[FilterVerdict], undecided: usize, skipped: usize, failed: usize) {
    let mut table: BTreeMap<(FilterStage, &str), usize> = BTreeMap::new();
    for v in verdicts {
        *table.entry((v.stage, v.decision.as_str())).or_insert(0) += 1;
    }
    println!("{:<22} {:<8} {:>6}", "stage", "decision", "count");
    for ((stage, decision), n) in &table {
        println!("{:<22} {:<8} {:>6}", stage.as_str(), decision, n);
    }
    println!("undecided (stage limit): {undecided}");
    println!("already filtered:        {skipped}");
    println!("failed:                  {failed}");
}

pub fn prompt(ctx: &Context, args: PromptArgs) -> Result<(), CliError> {
    let records = ingest_manifest(&args.manifest)?;
    let mut cfg = ctx.cfg.prompt_config(&args.manifest)?;
    if let Some(a) = &args.ablate {
        cfg.ablation = a.parse().map_err(CliError::argument)?;
    }
    if let Some(k) = args.k {
        if k == 0 {
            return Err(CliError::argument("--k must be at least 1"));
        }
        cfg.k = k;
    }
    if let Some(fps) = args.fps {
        if !(fps > 0.0) {
            return Err(CliError::argument(format!("--fps must be positive, got {fps}")));
        }
        cfg.fps = fps;
    }
    let selected: Vec<_> = if args.ids.is_empty() {
        records
    } else {
        let by_id: BTreeMap<&str, _> = records.iter().map(|r| (r.id.as_str(), r)).collect();
        args.ids
            .iter()
            .map(|id| by_id.get(id.as_str()).map(|r| (*r).clone()).ok_or_else(|| CliError::new("not_found", format!("unknown video id {id:?}"))))
            .collect::<Result<_, _>>()?
    };
    create_dir(&args.out)?;
    let client = ctx.cfg.client()?;
    let failures: Vec<(String, CliError)> = selected
        .par_iter()
        .filter_map(|r| {
            let res = build_prompt(r, &client, &cfg).map_err(CliError::from).and_then(|b| {
                std::fs::write(args.out.join(format!("{}{PROMPT_SUFFIX}", r.id)), b.document.render())
                    .map_err(|e| CliError::io(&args.out, e))?;
                write_json(&args.out.join(format!("{}{META_SUFFIX}", r.id)), &b.metadata)
            });
            res.err().map(|e| (r.id.clone(), e))
        })
        .collect();
    println!("built {} of {} prompts in {}", selected.len() - failures.len(), selected.len(), args.out.display());
    check_failures("prompts", selected.len(), failures)
}

/// `(id, path)` of every prompt file in `dir`, sorted by id.
pub fn prompt_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if let Some(id) = name.strip_suffix(PROMPT_SUFFIX) {
            out.push((id.to_string(), path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn explain(ctx: &Context, args: ExplainArgs) -> Result<(), CliError> {
    let endpoint = args.endpoint.clone().or_else(|| ctx.cfg.explain.endpoint.clone());
    let client = ctx.cfg.client()?;
    if let Some(name) = &endpoint {
        if !client.has_completion_endpoint(name) {
            return Err(CliError::config(format!("completion endpoint {name:?} is not configured")));
        }
    }
    let prompts = prompt_files(&args.prompts)?;
    if prompts.is_empty() {
        return Err(CliError::argument(format!("no *{PROMPT_SUFFIX} files in {}", args.prompts.display())));
    }
    let results: Vec<(String, Result<String, CliError>)> = prompts
        .par_iter()
        .map(|(id, path)| {
            let res = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(path, e))
                .and_then(|p| explain_prompt(&p, &client, endpoint.as_deref()).map_err(CliError::from))
                .and_then(|text| {
                    let out = args.prompts.join(format!("{id}{EXPLANATION_SUFFIX}"));
                    std::fs::write(&out, &text).map_err(|e| CliError::io(&out, e))?;
                    Ok(text)
                });
            (id.clone(), res)
        })
        .collect();
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for (id, res) in results {
        match res {
            Ok(explanation) => done.push(Prediction { id, explanation: explanation.trim().to_string() }),
            Err(e) => failures.push((id, e)),
        }
    }
    let out = args.prompts.join(EXPLANATIONS_FILE);
    write_jsonl(&out, &done)?;
    println!("wrote {} explanations to {}", done.len(), out.display());
    check_failures("explanations", prompts.len(), failures)
}

