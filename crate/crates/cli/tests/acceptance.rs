//! Acceptance suite: one PASS/FAIL line per criterion. Every check is
//! computed against an independent oracle, never against the code under
//! test.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use vidhumor::backends::wire::AsrResponse;
use vidhumor::backends::{Client, CompleteRule, LocalizeRule, MomentCandidate, ScriptFixture, ScriptedTransport, SoundTag};
use vidhumor::corpus::{
    make_kfold_splits, make_tvt_split, read_manifest, validate_annotations, FilterStage, Partition, SplitLabel,
    Transcript, Utterance, VideoRecord, ViolationKind,
};
use vidhumor::evalkit::{
    aggregate_rating, concat_moments, rationale_quality, run_rationale_eval, temporal_iou, threshold_report, Interval,
    Metric, RqItem, RA_THRESHOLDS, SENTBERT_THRESHOLDS,
};
use vidhumor::filterpipe::{run_filter, FilterConfig, FilterDecision};
use vidhumor::promptforge::{build_prompt, PromptConfig};
use vidhumor::segmenter::refine_with_utterances;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden_dir() -> PathBuf {
    repo_root().join("fixtures/golden")
}

fn scripted(f: ScriptFixture) -> Client {
    Client::uniform(Arc::new(ScriptedTransport::new(f)))
}

// ---------------------------------------------------------------- IoU

/// Overlap counted over 1 ms cells `[k, k+1)`.
fn raster_iou(a: (u32, u32), b: (u32, u32)) -> f64 {
    let (mut inter, mut union) = (0u64, 0u64);
    for ms in a.0.min(b.0)..a.1.max(b.1) {
        let ia = (a.0..a.1).contains(&ms);
        let ib = (b.0..b.1).contains(&ms);
        inter += u64::from(ia && ib);
        union += u64::from(ia || ib);
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn iou_oracle() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut overlapping = 0;
    for _ in 0..1000 {
        let mut span = || {
            let s = rng.gen_range(0..20_000u32);
            (s, s + rng.gen_range(1..8_000u32))
        };
        let (a, b) = (span(), span());
        let iv = |(s, e): (u32, u32)| Interval::new(s as f64 / 1000.0, e as f64 / 1000.0).unwrap();
        let got = temporal_iou(&iv(a), &iv(b));
        let want = raster_iou(a, b);
        overlapping += usize::from(want > 0.0);
        worst = worst.max((got - want).abs());
    }
    let elapsed = started.elapsed();
    ensure(worst <= 1e-6, || format!("max |iou - raster| = {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    ensure(overlapping > 100, || format!("only {overlapping} overlapping pairs"))?;
    Ok(format!("1000 pairs ({overlapping} overlapping), max error {worst:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- rationale quality

fn cand(s: f64, e: f64) -> MomentCandidate {
    MomentCandidate { start_s: s, end_s: e, score: 1.0 }
}

fn rule(video: &str, query: Option<&str>, c: Vec<MomentCandidate>) -> LocalizeRule {
    LocalizeRule { video: video.into(), query: query.map(Into::into), query_contains: None, candidates: c }
}

fn rationale_identity() -> Check {
    // model explanations equal to gold: both localizations see the same query
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut gold = Vec::new();
    let mut fixture = ScriptFixture::default();
    for i in 0..20 {
        let id = format!("g{i:02}");
        let d = 30.0;
        let s = rng.gen_range(0.0..20.0);
        let r = VideoRecord::new(&id, d).with_moment(s, s + 4.0, &format!("Moment {i} is funny because of a twist."));
        let jitter = rng.gen_range(0.0..3.0);
        fixture.localize.push(rule(&id, None, vec![cand(s + jitter, s + 4.0 + jitter), cand(0.0, 1.0)]));
        gold.push(r);
    }
    let ids: Vec<String> = gold.iter().map(|r| r.id.clone()).collect();
    let preds: BTreeMap<String, String> = gold.iter().map(|r| (r.id.clone(), concat_moments(r).unwrap())).collect();
    let client = scripted(fixture);
    let eval = run_rationale_eval(&ids, &preds, &gold, &client, &[0.3, 0.5]).map_err(|e| e.to_string())?;
    for q in &eval.quality {
        ensure(q.s == 0.0, || format!("S(tau={}) = {} on gold-vs-gold", q.tau, q.s))?;
    }
    let counted: Vec<usize> = eval.quality.iter().map(|q| q.counted).collect();
    ensure(counted.iter().all(|&c| c > 0), || format!("vacuous identity: counted {counted:?}"))?;

    // three items computed by hand
    //   a: gold [2,6]   cand_g [2,6] -> 1.0    cand_m [3,7] -> 3/5 = 0.6
    //   b: gold [0,4]   cand_g [1,4] -> 0.75   cand_m [3,5] -> 1/5 = 0.2
    //   c: gold [10,20] cand_g [10,18] -> 0.8  cand_m [12,16] -> 4/10 = 0.4
    //   tau 0.3: a and c count: (1.0-0.6) + (0.8-0.4) = 0.8
    //   tau 0.5: only a counts: 0.4
    let gold = vec![
        VideoRecord::new("a", 10.0).with_moment(2.0, 6.0, "gold a"),
        VideoRecord::new("b", 10.0).with_moment(0.0, 4.0, "gold b"),
        VideoRecord::new("c", 30.0).with_moment(10.0, 20.0, "gold c"),
    ];
    let mut f = ScriptFixture::default();
    for (id, g, m) in [
        ("a", cand(2.0, 6.0), cand(3.0, 7.0)),
        ("b", cand(1.0, 4.0), cand(3.0, 5.0)),
        ("c", cand(10.0, 18.0), cand(12.0, 16.0)),
    ] {
        f.localize.push(rule(id, Some(&format!("gold {id}")), vec![g]));
        f.localize.push(rule(id, Some(&format!("model {id}")), vec![m]));
    }
    let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let preds: BTreeMap<String, String> = ids.iter().map(|i| (i.clone(), format!("model {i}"))).collect();
    let eval = run_rationale_eval(&ids, &preds, &gold, &scripted(f), &[0.3, 0.5]).map_err(|e| e.to_string())?;
    for (q, (tau, s, counted)) in eval.quality.iter().zip([(0.3, 0.8, 2), (0.5, 0.4, 1)]) {
        ensure(q.tau == tau && (q.s - s).abs() <= 1e-9 && q.counted == counted, || {
            format!("tau {tau}: got S={} counted={}, want S={s} counted={counted}", q.s, q.counted)
        })?;
    }
    let hand = [(1.0, 0.6), (0.75, 0.2), (0.8, 0.4)].map(|(g, m): (f64, f64)| RqItem { iou_g: g, iou_m: m });
    for (tau, s) in [(0.3, 0.8), (0.5, 0.4)] {
        let q = rationale_quality(&hand, tau);
        ensure((q.s - s).abs() <= 1e-9, || format!("formula at tau {tau}: {} vs {s}", q.s))?;
    }
    Ok(format!("S=0 at tau 0.3/0.5 over 20 items (counted {counted:?}); hand fixture S=0.8/0.4"))
}

// ---------------------------------------------------------------- filter

const WITH_CAPTION: &str = "Video caption:";
const DETECT: &str = "quote the funniest";
const EXPLAIN: &str = "Explain in one sentence";

/// (b finds a funny utterance, c finds one, similarity strictly above θ).
/// When `above` is false the similarity equals θ = 0.6 exactly.
fn filter_scenario(b: bool, c: bool, above: bool) -> ScriptFixture {
    let mut f = ScriptFixture::default();
    f.asr.insert(
        "v".into(),
        AsrResponse {
            language: "en".into(),
            utterances: vec![Utterance::new(0.0, 1.5, "Hold my drink."), Utterance::new(1.5, 3.0, "That went well.")],
        },
    );
    f.caption.insert("*".into(), vec!["a man slips on ice".into()]);
    let found = "\"That went well.\"";
    let none = "None.";
    f.complete.push(CompleteRule::containing([WITH_CAPTION, DETECT], if b { found } else { none }));
    f.complete.push(CompleteRule::containing([DETECT], if c { found } else { none }));
    f.complete.push(CompleteRule::containing([WITH_CAPTION, EXPLAIN], "with caption"));
    f.complete.push(CompleteRule::containing([EXPLAIN], "transcript only"));
    f.embed.insert("with caption".into(), vec![1.0, 0.0]);
    // cos([1,0], [0.6,0.8]) = 0.6 exactly in binary64
    f.embed.insert("transcript only".into(), if above { vec![1.0, 0.0] } else { vec![0.6, 0.8] });
    f
}

/// The decision table written out independently of the implementation.
fn filter_truth(b: bool, c: bool, above: bool) -> (FilterDecision, FilterStage) {
    if !b {
        (FilterDecision::Reject, FilterStage::BFunnyWithCaption)
    } else if !c {
        (FilterDecision::Accept, FilterStage::CTranscriptOnly)
    } else if above {
        (FilterDecision::Reject, FilterStage::DDivergence)
    } else {
        (FilterDecision::Accept, FilterStage::DDivergence)
    }
}

fn filter_truth_table() -> Check {
    let cfg = FilterConfig::default();
    ensure(cfg.divergence_threshold == 0.6, || format!("default threshold {}", cfg.divergence_threshold))?;
    let mut ok = 0;
    let mut boundary = false;
    for b in [false, true] {
        for c in [false, true] {
            for above in [false, true] {
                let mut rec = VideoRecord::new("v", 3.0);
                let v = run_filter(&mut rec, &scripted(filter_scenario(b, c, above)), &cfg).map_err(|e| e.to_string())?;
                ensure((v.decision, v.stage) == filter_truth(b, c, above), || {
                    format!("b={b} c={c} above={above}: got {} at {}", v.decision.as_str(), v.stage)
                })?;
                if b && c && !above {
                    ensure(v.detail.starts_with("similarity=0.6000"), || format!("boundary detail {:?}", v.detail))?;
                    boundary = true;
                }
                ok += 1;
            }
        }
    }
    ensure(boundary, || "boundary scenario not reached".into())?;
    Ok(format!("{ok}/8 scenarios, similarity = threshold accepts"))
}

// ---------------------------------------------------------------- golden prompt

fn golden_build(ablation: &str) -> Result<String, String> {
    let dir = golden_dir();
    let records = read_manifest(&dir.join("manifest.jsonl")).map_err(|e| e.to_string())?;
    let client = Client::uniform(Arc::new(ScriptedTransport::load(&dir.join("backend.json")).map_err(|e| e.to_string())?));
    let cfg = PromptConfig { media_root: dir, ablation: ablation.parse()?, ..Default::default() };
    Ok(build_prompt(&records[0], &client, &cfg).map_err(|e| e.to_string())?.document.render())
}

fn golden_prompt() -> Check {
    let golden = std::fs::read_to_string(golden_dir().join("v1.prompt.txt")).map_err(|e| e.to_string())?;
    let full = golden_build("")?;
    ensure(full == golden, || "rendered prompt differs from the frozen golden file".into())?;

    let lines: Vec<&str> = golden.lines().collect();
    ensure(lines.contains(&"(Music, Laughter)"), || "no sound-tag line".into())?;
    ensure(lines.iter().filter(|l| l.starts_with("Scene: ")).count() == 2, || "expected 2 scene markers".into())?;
    let speech: Vec<&str> = lines.iter().copied().filter(|l| l.starts_with("Speaker ")).collect();
    ensure(
        speech == ["Speaker 1: Okay, watch me land this one.", "Speaker 1: Did you see that?", "Speaker 2: Yeah, you landed it all right."],
        || format!("speaker lines out of order: {speech:?}"),
    )?;
    ensure(golden.ends_with("Explain why this video is funny in up to three sentences.\n"), || "footer missing".into())?;

    // each ablation must equal the golden text with exactly its lines edited
    let edit = |f: &dyn Fn(&str) -> Option<String>| -> String {
        let kept: Vec<String> = golden.lines().filter_map(f).collect();
        let mut s = kept.join("\n");
        while s.contains("\n\n\n") {
            s = s.replace("\n\n\n", "\n\n");
        }
        s + "\n"
    };
    let no_visual = edit(&|l| Some(if l.starts_with("Scene: ") { "Scene:".into() } else { l.into() }));
    let no_speech = edit(&|l| (!l.starts_with("Speaker ")).then(|| l.into()));
    let no_sound = edit(&|l| (l != "(Music, Laughter)").then(|| l.into()));
    for (abl, want) in [("v", no_visual), ("t", no_speech), ("a", no_sound)] {
        let got = golden_build(abl)?;
        ensure(got == want, || format!("ablation {abl}:\n--- got\n{got}--- want\n{want}"))?;
    }
    Ok(format!("{} bytes byte-exact; v/t/a ablations edit only their lines", golden.len()))
}

// ---------------------------------------------------------------- segmentation

fn segmentation_tiling() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let tol = 0.05 + 1e-9;
    let mut total_segments = 0;
    for case in 0..200 {
        let duration: f64 = rng.gen_range(0.5..60.0);
        let mut shots: Vec<f64> = (0..rng.gen_range(0..8)).map(|_| rng.gen_range(0.001..duration)).collect();
        shots.sort_by(f64::total_cmp);
        let mut starts: Vec<f64> = (0..rng.gen_range(0..10)).map(|_| rng.gen_range(0.0..duration)).collect();
        // force near-duplicates with shot boundaries now and then
        if let (Some(&s), true) = (shots.first(), rng.gen_bool(0.3)) {
            starts.push((s + rng.gen_range(-0.04..0.04)).clamp(0.0, duration - 1e-3));
        }
        let utts: Vec<Utterance> = starts.iter().map(|&s| Utterance::new(s, (s + 0.5).min(duration), "x")).collect();
        let segs = refine_with_utterances(&shots, &Transcript::new("en", utts), duration);
        total_segments += segs.len();

        ensure(!segs.is_empty() && segs[0].start_s == 0.0, || format!("case {case}: first segment not at 0"))?;
        ensure((segs.last().unwrap().end_s - duration).abs() <= 1e-6, || format!("case {case}: does not end at duration"))?;
        let mut sum = 0.0;
        for (i, s) in segs.iter().enumerate() {
            ensure(s.index == i && s.end_s > s.start_s, || format!("case {case}: bad segment {s:?}"))?;
            if i > 0 {
                ensure(segs[i - 1].end_s == s.start_s, || format!("case {case}: gap or overlap at {i}"))?;
            }
            sum += s.end_s - s.start_s;
        }
        ensure((sum - duration).abs() <= 1e-6, || format!("case {case}: lengths sum to {sum}, duration {duration}"))?;
        let bounds: Vec<f64> = std::iter::once(0.0).chain(segs.iter().map(|s| s.end_s)).collect();
        for &u in &starts {
            let near = bounds.iter().any(|&b| (b - u).abs() <= tol);
            ensure(near || u == 0.0, || format!("case {case}: utterance start {u} not on a boundary {bounds:?}"))?;
        }
    }
    Ok(format!("200 cases, {total_segments} segments, all tiling and utterance-aligned"))
}

// ---------------------------------------------------------------- splits

fn split_arithmetic() -> Check {
    let ids: Vec<String> = (0..10_136).map(|i| format!("vid{i:05}")).collect();
    let kf = make_kfold_splits(&ids, 5, 42).map_err(|e| e.to_string())?;
    let mut sizes: Vec<usize> = kf.sizes().values().copied().collect();
    sizes.sort_unstable();
    ensure(sizes == [2027, 2027, 2027, 2027, 2028], || format!("kfold5 sizes {sizes:?}"))?;

    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for i in 0..5 {
        let rot = kf.rotation(i).ok_or("missing rotation")?;
        ensure(rot.train.len() + rot.validation.len() + rot.test.len() == ids.len(), || format!("rotation {i} loses ids"))?;
        let v: BTreeSet<&String> = rot.validation.iter().collect();
        ensure(rot.test.iter().all(|t| !v.contains(t)), || format!("rotation {i}: test overlaps validation"))?;
        for id in &rot.test {
            *seen.entry(id.clone()).or_insert(0) += 1;
        }
    }
    ensure(seen.len() == ids.len() && seen.values().all(|&n| n == 1), || "an id is not in exactly one test fold".into())?;

    let tvt = make_tvt_split(&ids, (8, 1, 1), 42).map_err(|e| e.to_string())?;
    let s = tvt.sizes();
    let get = |p| s.get(&SplitLabel::Partition(p)).copied().unwrap_or(0);
    let got = (get(Partition::Train), get(Partition::Validation), get(Partition::Test));
    ensure(got == (8110, 1013, 1013), || format!("tvt sizes {got:?}"))?;
    Ok(format!("kfold5 {sizes:?}, each id tested once; tvt {got:?}"))
}

// ---------------------------------------------------------------- aggregation

/// Mean after removing one minimum and one maximum, found by scanning.
fn drop_extremes_oracle(v: &[i64; 5]) -> Ratio<i64> {
    let (mut imin, mut imax) = (0, 0);
    for i in 1..5 {
        if v[i] < v[imin] {
            imin = i;
        }
        if v[i] > v[imax] {
            imax = i;
        }
    }
    if imin == imax {
        imax = (imin + 1) % 5;
    }
    let kept: i64 = (0..5).filter(|&i| i != imin && i != imax).map(|i| v[i]).sum();
    Ratio::new(kept, 3 * 4)
}

fn aggregation_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 0..10_000 {
        let quarters: [i64; 5] = std::array::from_fn(|_| rng.gen_range(0..=4));
        let want = drop_extremes_oracle(&quarters);
        let exact = aggregate_rating(&quarters.map(|q| Ratio::new(q, 4))).map_err(|e| e.to_string())?;
        ensure(exact == want, || format!("tuple {n} {quarters:?}: rational {exact} vs {want}"))?;
        let float = aggregate_rating(&quarters.map(|q| q as f64 / 4.0)).map_err(|e| e.to_string())?;
        let want_f = *want.numer() as f64 / *want.denom() as f64;
        ensure(float == want_f, || format!("tuple {n} {quarters:?}: f64 {float} vs {want_f}"))?;
    }

    let mut checked = 0;
    for trial in 0..300 {
        let n = rng.gen_range(1..60);
        let scores: BTreeMap<String, f64> = (0..n)
            .map(|i| {
                // some scores land exactly on thresholds
                let s = if rng.gen_bool(0.2) { [0.4, 0.5, 0.6, 0.7, 0.8][rng.gen_range(0..5)] } else { rng.gen_range(-0.2..1.0) };
                (format!("i{i}"), s)
            })
            .collect();
        for (metric, ks) in [(Metric::Sentbert, &SENTBERT_THRESHOLDS[..]), (Metric::RoscoeRa, &RA_THRESHOLDS[..])] {
            let r = threshold_report(metric, &scores, ks).map_err(|e| e.to_string())?;
            let mean = scores.values().sum::<f64>() / n as f64;
            ensure((r.mean - mean).abs() <= 1e-12, || format!("trial {trial}: mean {} vs {mean}", r.mean))?;
            for &k in ks {
                let count = scores.values().filter(|&&s| s >= k).count();
                let want = count as f64 / n as f64;
                let got = r.at(k).ok_or_else(|| format!("missing @{k}"))?;
                ensure((got - want).abs() <= 1e-12, || format!("trial {trial}: @{k} {got} vs {want}"))?;
                checked += 1;
            }
            // monotone: a higher threshold never admits more items
            let mut rand_ks: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.5..1.1)).collect();
            rand_ks.sort_by(f64::total_cmp);
            let r = threshold_report(metric, &scores, &rand_ks).map_err(|e| e.to_string())?;
            let props: Vec<f64> = rand_ks.iter().map(|&k| r.at(k).unwrap()).collect();
            ensure(props.windows(2).all(|w| w[0] >= w[1]), || format!("trial {trial}: not monotone {props:?}"))?;
        }
    }
    Ok(format!("10000 rating tuples exact (Ratio and f64); {checked} @K cells; monotone on 600 random sets"))
}

// ---------------------------------------------------------------- validator

fn validator() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut records: Vec<VideoRecord> = (0..12)
        .map(|i| {
            let d = rng.gen_range(5.0..30.0);
            let s = rng.gen_range(0.0..d / 2.0);
            VideoRecord::new(format!("r{i:02}"), d).with_moment(s, s + 1.0, "He trips. It is funny because he boasted.")
        })
        .collect();
    let d = records[2].duration_s;
    for k in 0..3 {
        records[2] = records[2].clone().with_moment(k as f64 * 0.1, k as f64 * 0.1 + 0.5, "Another beat. It is funny because of timing.");
    }
    ensure(records[2].annotations.len() == 4 && d > 1.0, || "planting four moments failed".into())?;
    let m = &mut records[5].annotations[0];
    (m.start_s, m.end_s) = (m.end_s, m.start_s);
    records[9].annotations[0].explanation = "  ".into();

    let planted: BTreeSet<(String, ViolationKind)> = [
        ("r02", ViolationKind::MomentCountExceeded),
        ("r05", ViolationKind::InvertedInterval),
        ("r09", ViolationKind::EmptyExplanation),
    ]
    .into_iter()
    .map(|(i, k)| (i.to_string(), k))
    .collect();
    let found: Vec<(String, ViolationKind)> =
        records.iter().flat_map(validate_annotations).map(|v| (v.record_id, v.kind)).collect();
    ensure(found.len() == 3 && found.iter().cloned().collect::<BTreeSet<_>>() == planted, || format!("found {found:?}"))?;

    let path = dir.path().join("planted.jsonl");
    let body: String = records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    std::fs::write(&path, body).map_err(|e| e.to_string())?;
    let out = cli(&["validate", "--manifest", path.to_str().unwrap()], &[]).map_err(|e| e.to_string())?;
    let errors = out.stdout.lines().filter(|l| l.starts_with("error: ")).count();
    ensure(!out.ok && errors == 3, || format!("CLI on planted manifest: ok={} errors={errors}\n{}", out.ok, out.stdout))?;

    let clean = golden_dir().join("manifest.jsonl");
    let golden = read_manifest(&clean).map_err(|e| e.to_string())?;
    let n: usize = golden.iter().map(|r| validate_annotations(r).len()).sum();
    let out = cli(&["validate", "--manifest", clean.to_str().unwrap()], &[]).map_err(|e| e.to_string())?;
    ensure(n == 0 && out.ok && !out.stdout.contains("error: "), || format!("clean fixture: {n} violations\n{}", out.stdout))?;
    Ok("planted manifest reports exactly 3 (library and CLI); clean fixture 0".into())
}

// ---------------------------------------------------------------- end to end

struct CliOutput {
    ok: bool,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str], env: &[(&str, &str)]) -> std::io::Result<CliOutput> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vidhumor"));
    cmd.args(args).env_remove("VIDHUMOR_BACKEND_URL").env_remove("VIDHUMOR_LOG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output()?;
    Ok(CliOutput {
        ok: out.status.success(),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    })
}

struct KillOnDrop(Child);

impl Drop for KillOnDrop {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

struct SmokeVideo {
    id: &'static str,
    setup: &'static str,
    punchline: &'static str,
    gold: &'static str,
    /// Expected filter outcome.
    decision: FilterDecision,
    stage: FilterStage,
}

const SMOKE: [SmokeVideo; 5] = [
    SmokeVideo {
        id: "s1",
        setup: "I will bake the perfect cake today.",
        punchline: "Well, the floor enjoyed it.",
        gold: "She drops the cake right after bragging about it. It is funny because the boast sets up the failure.",
        decision: FilterDecision::Accept,
        stage: FilterStage::CTranscriptOnly,
    },
    SmokeVideo {
        id: "s2",
        setup: "Watch my dog fetch the newspaper.",
        punchline: "He brought the neighbor's cat instead.",
        gold: "The dog returns with a cat instead of the paper. It is funny because the owner's confidence is misplaced.",
        decision: FilterDecision::Accept,
        stage: FilterStage::CTranscriptOnly,
    },
    SmokeVideo {
        id: "s3",
        setup: "This ladder is completely safe.",
        punchline: "Nobody saw anything.",
        gold: "He falls off the ladder and pretends nothing happened. It is funny because of the denial.",
        decision: FilterDecision::Accept,
        stage: FilterStage::DDivergence,
    },
    SmokeVideo {
        id: "s4",
        setup: "Why did the chicken cross the road?",
        punchline: "To get to the other side.",
        gold: "A classic joke told with a straight face. It is funny because it is an anti-joke.",
        decision: FilterDecision::Reject,
        stage: FilterStage::DDivergence,
    },
    SmokeVideo {
        id: "s5",
        setup: "Today we review the quarterly numbers.",
        punchline: "Revenue is flat this quarter.",
        gold: "A dull meeting with nothing happening. It is funny because nothing is.",
        decision: FilterDecision::Reject,
        stage: FilterStage::BFunnyWithCaption,
    },
];

fn smoke_fixture() -> ScriptFixture {
    let mut f = ScriptFixture::default();
    f.caption.insert("*".into(), vec!["a person stands in a room".into(), "a person reacts to something".into()]);
    f.retrieve.insert("*".into(), [("a person reacts to something".to_string(), 0.9)].into());
    f.embed_fallback = Some(vidhumor::backends::EmbedFallback::HashedBow);
    for v in &SMOKE {
        f.asr.insert(
            v.id.into(),
            AsrResponse {
                language: "en".into(),
                utterances: vec![Utterance::new(0.2, 1.4, v.setup), Utterance::new(1.8, 2.8, v.punchline)],
            },
        );
        f.audiotag.insert(v.id.into(), vec![SoundTag::new("Laughter", 0.7), SoundTag::new("Speech", 0.9)]);
        let quote = format!("\"{}\"", v.punchline);
        let b = v.stage != FilterStage::BFunnyWithCaption;
        let c = v.stage == FilterStage::DDivergence;
        f.complete.push(CompleteRule::containing([WITH_CAPTION, DETECT, v.setup], if b { quote.as_str() } else { "None." }));
        f.complete.push(CompleteRule::containing([DETECT, v.setup], if c { quote.as_str() } else { "None." }));
        let with_caption = format!("The visual of {} makes it funny.", v.id);
        let transcript_only = if v.decision == FilterDecision::Accept {
            "Wordplay alone carries humor here.".to_string()
        } else {
            with_caption.clone()
        };
        f.complete.push(CompleteRule::containing([WITH_CAPTION, EXPLAIN, v.setup], with_caption));
        f.complete.push(CompleteRule::containing([EXPLAIN, v.setup], transcript_only));
        f.complete.push(CompleteRule::containing(["Please generate an explanation", v.setup], v.gold.replace("It is funny", "This is funny")));
        f.localize.push(LocalizeRule {
            video: v.id.into(),
            query: None,
            query_contains: Some("It is funny".into()),
            candidates: vec![cand(1.6, 3.0), cand(0.0, 1.0)],
        });
        f.localize.push(rule(v.id, None, vec![cand(1.2, 2.6), cand(0.0, 1.0)]));
    }
    f.complete.push(CompleteRule::containing(["assign a speaker to each utterance"], "1: Speaker 1\n2: Speaker 2"));
    f
}

fn write_smoke_corpus(root: &Path) -> std::io::Result<PathBuf> {
    let mut lines = String::new();
    for (n, v) in SMOKE.iter().enumerate() {
        let frames = root.join(v.id).join("frames");
        std::fs::create_dir_all(&frames)?;
        for i in 0..15u32 {
            let ms = i * 200;
            let colour = if ms < 1600 { [200, 40, 40] } else { [30, 60, 220 - 20 * n as u8] };
            image::RgbImage::from_pixel(8, 8, image::Rgb(colour))
                .save(frames.join(format!("frame_{ms:04}.png")))
                .map_err(std::io::Error::other)?;
        }
        std::fs::write(root.join(v.id).join("audio.wav"), b"")?;
        let rec = VideoRecord::new(v.id, 3.0).with_moment(1.6, 3.0, v.gold);
        lines.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        lines.push('\n');
    }
    let manifest = root.join("corpus.jsonl");
    std::fs::write(&manifest, lines)?;
    Ok(manifest)
}

fn start_mock(fixture: &Path) -> Result<(KillOnDrop, String), String> {
    let child = Command::new(env!("CARGO_BIN_EXE_vidhumor"))
        .args(["mock-backend", "--fixture", fixture.to_str().unwrap(), "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| format!("spawn mock-backend: {e}"))?;
    let mut guard = KillOnDrop(child);
    let stdout = guard.0.stdout.take().ok_or("no stdout")?;
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).map_err(|e| e.to_string())?;
    let url = line.trim().strip_prefix("listening on ").ok_or_else(|| format!("unexpected banner {line:?}"))?;
    Ok((guard, url.to_string()))
}

fn end_to_end() -> Check {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let manifest = write_smoke_corpus(root).map_err(|e| e.to_string())?;
    let fixture = root.join("backend.json");
    std::fs::write(&fixture, serde_json::to_string_pretty(&smoke_fixture()).unwrap()).map_err(|e| e.to_string())?;
    let (_server, url) = start_mock(&fixture)?;
    let env = [("VIDHUMOR_BACKEND_URL", url.as_str())];
    let m = manifest.to_str().unwrap();
    let prompts = root.join("prompts");
    let p = prompts.to_str().unwrap();
    let preds = prompts.join("explanations.jsonl");
    let reports = root.join("reports");

    let run = |step: &str, args: &[&str]| -> Result<CliOutput, String> {
        let out = cli(args, &env).map_err(|e| e.to_string())?;
        ensure(out.ok, || format!("{step} failed:\n{}\n{}", out.stdout, out.stderr))?;
        Ok(out)
    };

    run("filter", &["filter", "--manifest", m])?;
    let verdicts: Vec<Value> = std::fs::read_to_string(root.join("corpus.verdicts.jsonl"))
        .map_err(|e| e.to_string())?
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for v in &SMOKE {
        let got = verdicts.iter().find(|x| x["video_id"] == v.id).ok_or_else(|| format!("no verdict for {}", v.id))?;
        let want = json!({"decision": v.decision.as_str(), "stage": v.stage.as_str()});
        ensure(got["decision"] == want["decision"] && got["stage"] == want["stage"], || format!("{}: {got}", v.id))?;
    }
    let stats = run("stats", &["stats", "--manifest", m, "--json"])?;
    let stats: Value = serde_json::from_str(&stats.stdout).map_err(|e| e.to_string())?;
    ensure(stats["states"]["triage_pending"] == 3 && stats["states"]["filtered_rejected"] == 2, || format!("states {}", stats["states"]))?;

    run("prompt", &["prompt", "--manifest", m, "--out", p])?;
    run("explain", &["explain", "--prompts", p])?;
    let n_preds = std::fs::read_to_string(&preds).map_err(|e| e.to_string())?.lines().count();
    ensure(n_preds == SMOKE.len(), || format!("{n_preds} explanations"))?;

    let pr = preds.to_str().unwrap();
    let rdir = reports.to_str().unwrap();
    let auto = run("eval auto", &["eval", "auto", "--pred", pr, "--gold", m, "--system", "mock", "--out", rdir])?;
    let rq = run("eval rq", &["eval", "rq", "--pred", pr, "--gold", m, "--tau", "0.3,0.5", "--system", "mock", "--out", rdir])?;
    let elapsed = started.elapsed();

    for out in [&auto, &rq] {
        let table: Vec<&str> = out.stdout.lines().filter(|l| l.starts_with('|')).collect();
        ensure(table.len() == 3, || format!("table shape:\n{}", out.stdout))?;
        ensure(table[0].contains("SentBERT Mean") && table[0].contains("S(τ=0.3)") && table[2].contains("mock"), || {
            format!("table header/row:\n{}", out.stdout)
        })?;
    }
    let auto_row = auto.stdout.lines().find(|l| l.starts_with("| mock")).unwrap_or_default();
    let rq_row = rq.stdout.lines().find(|l| l.starts_with("| mock")).unwrap_or_default();
    let reports_written = std::fs::read_dir(&reports).map_err(|e| e.to_string())?.count();
    ensure(reports_written == 2, || format!("{reports_written} report files"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("filter/prompt/explain/eval over HTTP mock in {:.2}s\n        {auto_row}\n        {rq_row}", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- runner

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("iou oracle equivalence", iou_oracle),
        ("rationale quality identity", rationale_identity),
        ("filter truth table", filter_truth_table),
        ("golden prompt", golden_prompt),
        ("segmentation tiling", segmentation_tiling),
        ("split arithmetic", split_arithmetic),
        ("aggregation oracles", aggregation_oracles),
        ("corpus validator", validator),
        ("end-to-end smoke", end_to_end),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    println!("\nacceptance criteria");
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match res {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!();
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
