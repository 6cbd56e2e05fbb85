use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use vidhumor::backends::{Client, FallbackLocalizer, Localizer, SceneCaption};
use vidhumor::corpus::{read_manifest, Partition, SplitAssignment, SplitLabel, VideoRecord};
use vidhumor::evalkit::{
    classify_taxonomy, concat_moments, default_categories, load_categories, ra_score, render_table2, render_taxonomy,
    run_rationale_eval, sentbert_score, summarize_human, taxonomy_report, threshold_report, write_report,
    ComparisonRecord, EvalError, EvalReport, Exclusion, ItemScores, Metric, RatingRecord,
};
use vidhumor::promptforge::BuildMetadata;

use super::pipeline::{Prediction, META_SUFFIX};
use super::{read_jsonl, Context};
use crate::error::CliError;
use crate::{EvalCommand, ReportArgs, SplitSelect};

/// Which explanation decides an item's humor category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifySource {
    Gold,
    Pred,
}

impl FromStr for ClassifySource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gold" => Ok(ClassifySource::Gold),
            "pred" => Ok(ClassifySource::Pred),
            _ => Err(format!("expected gold or pred, got {s:?}")),
        }
    }
}

pub fn run(ctx: &Context, cmd: EvalCommand) -> Result<(), CliError> {
    match cmd {
        EvalCommand::Auto { pred, gold, metrics, select, report } => auto(ctx, &pred, &gold, &metrics, &select, &report),
        EvalCommand::Rq { pred, gold, tau, scenes, select, report } => rq(ctx, &pred, &gold, &tau, scenes.as_deref(), &select, &report),
        EvalCommand::Human { ratings, comparisons, report } => human(ctx, &ratings, comparisons.as_deref(), &report),
        EvalCommand::Taxonomy { pred, gold, categories, classify, report } => {
            taxonomy(ctx, &pred, &gold, categories.as_deref(), classify, &report)
        }
    }
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for p in read_jsonl::<Prediction>(path)? {
        if out.insert(p.id.clone(), p.explanation).is_some() {
            return Err(CliError::new("conflict", format!("{}: duplicate prediction id {:?}", path.display(), p.id)));
        }
    }
    Ok(out)
}

/// Ids under evaluation: the split's test partition (fold `--fold`, default
/// 0, for k-fold splits) or every gold id.
fn test_ids(gold: &[VideoRecord], select: &SplitSelect) -> Result<Vec<String>, CliError> {
    let Some(path) = &select.split else {
        if select.fold.is_some() {
            return Err(CliError::argument("--fold needs --split"));
        }
        return Ok(gold.iter().map(|r| r.id.clone()).collect());
    };
    let split = SplitAssignment::read(path)?;
    let label = match split.scheme {
        vidhumor::corpus::SplitScheme::KFold { k } => {
            let fold = select.fold.unwrap_or(0);
            if fold >= k {
                return Err(CliError::argument(format!("--fold {fold} out of range for {k} folds")));
            }
            SplitLabel::Fold(fold)
        }
        vidhumor::corpus::SplitScheme::Tvt { .. } => {
            if select.fold.is_some() {
                return Err(CliError::argument("--fold only applies to k-fold splits"));
            }
            SplitLabel::Partition(Partition::Test)
        }
    };
    Ok(split.ids_with(label))
}

fn reports_dir(ctx: &Context, args: &ReportArgs, anchor: &Path) -> PathBuf {
    args.out
        .clone()
        .or_else(|| ctx.cfg.paths.reports_dir.clone())
        .unwrap_or_else(|| anchor.parent().map(Path::to_path_buf).unwrap_or_default().join("reports"))
}

fn finish(ctx: &Context, args: &ReportArgs, anchor: &Path, report: &EvalReport) -> Result<(), CliError> {
    for x in &report.exclusions {
        eprintln!("excluded {}: {}", x.id, x.reason);
    }
    let path = write_report(&reports_dir(ctx, args, anchor), report)?;
    println!("{}", render_table2(std::slice::from_ref(report)));
    println!("report: {}", path.display());
    Ok(())
}

/// A prediction and its concatenated gold explanation.
struct TextPair {
    id: String,
    pred: String,
    gold: String,
}

/// Pairs every evaluable id with its texts; the rest are excluded.
fn pair_texts(
    ids: &[String],
    preds: &BTreeMap<String, String>,
    gold: &[VideoRecord],
) -> Result<(Vec<TextPair>, Vec<Exclusion>), CliError> {
    let by_id: BTreeMap<&str, &VideoRecord> = gold.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut ids: Vec<&String> = ids.iter().collect();
    ids.sort();
    ids.dedup();
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for id in ids {
        let reason = match (by_id.get(id.as_str()), preds.get(id)) {
            (None, _) => Some("no gold record"),
            (Some(r), _) if r.annotations.is_empty() => Some("no gold moments"),
            (_, None) => Some("no model explanation"),
            (_, Some(p)) if p.trim().is_empty() => Some("empty model explanation"),
            (Some(r), Some(p)) => {
                pairs.push(TextPair { id: id.clone(), pred: p.clone(), gold: concat_moments(r)? });
                None
            }
        };
        if let Some(reason) = reason {
            excluded.push(Exclusion { id: id.clone(), reason: reason.into() });
        }
    }
    if pairs.is_empty() {
        return Err(CliError::argument("no item has both a prediction and gold moments"));
    }
    Ok((pairs, excluded))
}

fn score_all(
    pairs: &[TextPair],
    client: &Client,
    f: fn(&str, &str, &Client) -> Result<f64, EvalError>,
) -> Result<ItemScores, CliError> {
    Ok(pairs
        .par_iter()
        .map(|p| f(&p.pred, &p.gold, client).map(|s| (p.id.clone(), s)))
        .collect::<Result<ItemScores, EvalError>>()?)
}

fn auto(ctx: &Context, pred: &Path, gold: &Path, metrics: &[Metric], select: &SplitSelect, args: &ReportArgs) -> Result<(), CliError> {
    if metrics.is_empty() {
        return Err(CliError::argument("--metrics is empty"));
    }
    let gold_records = read_manifest(gold)?;
    let preds = read_predictions(pred)?;
    let ids = test_ids(&gold_records, select)?;
    let (pairs, exclusions) = pair_texts(&ids, &preds, &gold_records)?;
    let client = ctx.cfg.client()?;
    let mut report = EvalReport::new(&args.system);
    report.exclusions = exclusions;
    for &m in metrics {
        match m {
            Metric::Sentbert => {
                let scores = score_all(&pairs, &client, sentbert_score)?;
                report.sentbert = Some(threshold_report(m, &scores, &ctx.cfg.eval.sentbert_thresholds)?);
            }
            Metric::RoscoeRa => {
                let scores = score_all(&pairs, &client, ra_score)?;
                report.roscoe_ra = Some(threshold_report(m, &scores, &ctx.cfg.eval.ra_thresholds)?);
            }
        }
    }
    finish(ctx, args, gold, &report)
}

/// In-process localizer over the captioned segments recorded by `prompt`.
fn scene_localizer(dir: &Path, client: Client, ids: &[String]) -> Result<FallbackLocalizer, CliError> {
    let mut loc = FallbackLocalizer::new(client);
    for id in ids {
        let path = dir.join(format!("{id}{META_SUFFIX}"));
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let meta: BuildMetadata =
            serde_json::from_str(&text).map_err(|e| CliError::new("parse", format!("{}: {e}", path.display())))?;
        let scenes = meta
            .segments
            .iter()
            .filter_map(|s| {
                s.caption.as_ref().map(|c| SceneCaption {
                    start_s: s.segment.start_s,
                    end_s: s.segment.end_s,
                    caption: c.caption.clone(),
                })
            })
            .collect();
        loc.insert(id.clone(), scenes);
    }
    Ok(loc)
}

fn rq(
    ctx: &Context,
    pred: &Path,
    gold: &Path,
    tau: &[f64],
    scenes: Option<&Path>,
    select: &SplitSelect,
    args: &ReportArgs,
) -> Result<(), CliError> {
    let taus = if tau.is_empty() { ctx.cfg.eval.taus.clone() } else { tau.to_vec() };
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::argument(format!("--tau values must lie in [0, 1], got {t}")));
    }
    let gold_records = read_manifest(gold)?;
    let preds = read_predictions(pred)?;
    let ids = test_ids(&gold_records, select)?;
    let client = ctx.cfg.client()?;
    let eval = match scenes {
        Some(dir) => {
            let loc = scene_localizer(dir, client, &ids)?;
            run_rationale_eval(&ids, &preds, &gold_records, &loc as &dyn Localizer, &taus)?
        }
        None => run_rationale_eval(&ids, &preds, &gold_records, &client as &dyn Localizer, &taus)?,
    };
    if eval.items.is_empty() {
        return Err(CliError::argument("no item has both a prediction and gold moments"));
    }
    let mut report = EvalReport::new(&args.system);
    report.exclusions = eval.exclusions.clone();
    for q in &eval.quality {
        println!("S(tau={}) = {:.4}  ({} of {} items)", q.tau, q.s, q.counted, q.n);
    }
    report.rationale = Some(eval);
    finish(ctx, args, gold, &report)
}

fn human(ctx: &Context, ratings: &Path, comparisons: Option<&Path>, args: &ReportArgs) -> Result<(), CliError> {
    let records: Vec<RatingRecord<f64>> = read_jsonl(ratings)?;
    let pairs: Vec<ComparisonRecord> = match comparisons {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let summary = summarize_human(&records, &pairs)?;
    for (system, mean) in &summary.mean_rating {
        println!("mean rating {system}: {mean:.4}");
    }
    for (pair, t) in &summary.comparisons {
        println!("comparison {pair}: A {} ({:.2}) vs B {} ({:.2})", t.a, t.proportion_a, t.b, t.proportion_b);
    }
    let mut report = EvalReport::new(&args.system);
    report.human = Some(summary);
    finish(ctx, args, ratings, &report)
}

fn taxonomy(
    ctx: &Context,
    pred: &Path,
    gold: &Path,
    categories: Option<&Path>,
    source: ClassifySource,
    args: &ReportArgs,
) -> Result<(), CliError> {
    let cats = match categories.or(ctx.cfg.eval.categories.as_deref()) {
        Some(p) => load_categories(p)?,
        None => default_categories(),
    };
    let gold_records = read_manifest(gold)?;
    let preds = read_predictions(pred)?;
    let ids: Vec<String> = gold_records.iter().map(|r| r.id.clone()).collect();
    let (pairs, exclusions) = pair_texts(&ids, &preds, &gold_records)?;
    let client = ctx.cfg.client()?;
    let endpoint = ctx.cfg.eval.classify_endpoint.as_deref();
    let scores = score_all(&pairs, &client, sentbert_score)?;
    let classes: BTreeMap<String, String> = pairs
        .par_iter()
        .map(|p| {
            let text = match source {
                ClassifySource::Gold => &p.gold,
                ClassifySource::Pred => &p.pred,
            };
            classify_taxonomy(text, &cats, &client, endpoint).map(|c| (p.id.clone(), c))
        })
        .collect::<Result<_, EvalError>>()?;
    let rows = taxonomy_report(&classes, &scores)?;
    println!("{}", render_taxonomy(&rows));
    let mut report = EvalReport::new(&args.system);
    report.exclusions = exclusions;
    report.taxonomy = Some(rows);
    finish(ctx, args, gold, &report)
}
