use std::collections::BTreeMap;

use serde::Serialize;
use vidhumor::corpus::{
    corpus_stats, duration_warning, lint_explanation_format, make_kfold_splits, make_tvt_split, read_manifest,
    split_file_path, validate_annotations, SplitScheme, StatsReport,
};

use super::pipeline::load_state;
use super::Context;
use crate::error::CliError;
use crate::{SplitArgs, StatsArgs, ValidateArgs};

pub fn split(ctx: &Context, args: SplitArgs) -> Result<(), CliError> {
    let scheme: SplitScheme = args.scheme.parse().map_err(CliError::argument)?;
    let records = read_manifest(&args.manifest)?;
    let ids: Vec<String> = records.into_iter().map(|r| r.id).collect();
    let split = match scheme {
        SplitScheme::KFold { k } => make_kfold_splits(&ids, k, ctx.seed)?,
        SplitScheme::Tvt { train, validation, test } => make_tvt_split(&ids, (train, validation, test), ctx.seed)?,
    };
    let out = args.out.unwrap_or_else(|| split_file_path(&args.manifest, scheme));
    split.write(&out)?;
    for (label, n) in split.sizes() {
        let name = serde_json::to_value(label).expect("label serializes");
        let name = name.as_str().map_or_else(|| format!("fold {name}"), str::to_string);
        println!("{name:<12} {n}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct StatsOutput {
    #[serde(flatten)]
    corpus: StatsReport,
    states: BTreeMap<&'static str, usize>,
}

pub fn stats(args: StatsArgs) -> Result<(), CliError> {
    let (state, _) = load_state(&args.manifest)?;
    let mut states = BTreeMap::new();
    for r in state.records() {
        *states.entry(r.state.name()).or_insert(0) += 1;
    }
    let out = StatsOutput { corpus: corpus_stats(state.records()), states };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&out).expect("stats serialize"));
    } else {
        println!("{}", out.corpus);
        println!("states:");
        for (name, n) in &out.states {
            println!("  {name}: {n}");
        }
    }
    Ok(())
}

/// Prints every violation and advisory note; fails when any hard
/// invariant is broken.
pub fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let records = read_manifest(&args.manifest)?;
    let mut violations = 0;
    for r in &records {
        for v in validate_annotations(r) {
            violations += 1;
            match v.moment {
                Some(i) => println!("error: {}: moment {i}: {}", v.record_id, v.kind.code()),
                None => println!("error: {}: {}", v.record_id, v.kind.code()),
            }
        }
        if let Some(w) = duration_warning(r, args.duration_cap) {
            println!("warning: {w}");
        }
        for (i, m) in r.annotations.iter().enumerate() {
            if let Some(note) = lint_explanation_format(&m.explanation) {
                println!("note: {}: moment {i}: {note}", r.id);
            }
        }
    }
    println!("{} records, {violations} violations", records.len());
    if violations > 0 {
        return Err(CliError::new("validation", format!("{violations} annotation violations")));
    }
    Ok(())
}
