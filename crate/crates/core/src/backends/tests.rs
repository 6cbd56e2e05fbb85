use std::collections::BTreeMap;
use std::sync::Arc;

use approx::assert_abs_diff_eq;

use super::scripted::{CompleteRule, EmbedFallback, LocalizeRule};
use super::*;
use crate::corpus::Utterance;

fn client(fixture: ScriptFixture) -> Client {
    Client::uniform(Arc::new(ScriptedTransport::new(fixture)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn asr_replays_script_and_silence() {
    let mut f = ScriptFixture::default();
    f.asr.insert(
        "v1".into(),
        wire::AsrResponse {
            language: "en".into(),
            utterances: vec![Utterance::new(0.5, 1.5, "hello there")],
        },
    );
    f.asr.insert(
        "silent".into(),
        wire::AsrResponse {
            language: "und".into(),
            utterances: vec![],
        },
    );
    f.asr.insert(
        "fr".into(),
        wire::AsrResponse {
            language: "fr".into(),
            utterances: vec![Utterance::new(0.0, 1.0, "bonjour")],
        },
    );
    let c = client(f);
    let t = c.asr(&MediaRef::new("v1")).unwrap();
    assert_eq!(t.utterances[0].text, "hello there");
    let s = c.asr(&MediaRef::new("silent")).unwrap();
    assert!(s.utterances.is_empty());
    assert_eq!(s.language, "und");
    assert!(!c.asr(&MediaRef::new("fr")).unwrap().is_english());
    assert!(matches!(c.asr(&MediaRef::new("nope")), Err(BackendError::Remote(_))));
}

#[test]
fn caption_counts_and_padding() {
    let mut f = ScriptFixture::default();
    f.caption.insert("*".into(), (0..20).map(|i| format!("cap {i}")).collect());
    f.caption.insert("two".into(), vec!["a".into(), "b".into()]);
    f.caption.insert("one".into(), vec!["only".into()]);
    let c = client(f);
    let frames: Vec<MediaRef> = (0..10).map(|i| MediaRef::new(format!("f{i}"))).collect();
    let caps = c.caption_frames(&frames, "Who is doing what?", 20).unwrap();
    assert_eq!(caps.iter().map(Vec::len).sum::<usize>(), 200);

    assert_eq!(c.caption_frames(&[MediaRef::new("one")], "p", 1).unwrap(), vec![vec!["only".to_string()]]);
    let padded = c.caption_frames(&[MediaRef::new("two")], "p", 3).unwrap();
    assert_eq!(padded[0], vec!["a", "b", "a"]);
    assert!(matches!(c.caption_frames(&frames, "p", 0), Err(BackendError::Argument(_))));
}

#[test]
fn retrieval_tie_breaks_low() {
    let mut f = ScriptFixture::default();
    f.retrieve.insert(
        "*".into(),
        BTreeMap::from([("a".into(), 0.2), ("b".into(), 0.9), ("c".into(), 0.9)]),
    );
    let c = client(f);
    let cands: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    assert_eq!(c.retrieve_best(&MediaRef::new("s"), &cands).unwrap(), (1, 0.9));
    assert_eq!(c.retrieve_best(&MediaRef::new("s"), &cands[..1]).unwrap().0, 0);
    assert!(matches!(c.retrieve_best(&MediaRef::new("s"), &[]), Err(BackendError::Argument(_))));
}

#[test]
fn retrieval_argmax_invariant_under_permutation() {
    let mut f = ScriptFixture::default();
    f.retrieve.insert(
        "*".into(),
        BTreeMap::from([("x".into(), 0.1), ("y".into(), 0.7), ("z".into(), 0.4)]),
    );
    let c = client(f);
    for order in [["x", "y", "z"], ["z", "x", "y"], ["y", "z", "x"]] {
        let cands: Vec<String> = order.map(String::from).to_vec();
        let (i, _) = c.retrieve_best(&MediaRef::new("s"), &cands).unwrap();
        assert_eq!(cands[i], "y");
    }
}

#[test]
fn audiotags_are_resorted() {
    let mut f = ScriptFixture::default();
    f.audiotag.insert(
        "v".into(),
        vec![SoundTag::new("speech", 0.25), SoundTag::new("music", 0.8), SoundTag::new("laughter", 0.5)],
    );
    f.audiotag.insert("quiet".into(), vec![]);
    f.audiotag.insert("bad".into(), vec![SoundTag::new("x", 1.5)]);
    let c = client(f);
    let labels: Vec<String> = c.audiotag(&MediaRef::new("v")).unwrap().into_iter().map(|t| t.label).collect();
    assert_eq!(labels, ["music", "laughter", "speech"]);
    assert!(c.audiotag(&MediaRef::new("quiet")).unwrap().is_empty());
    assert!(matches!(c.audiotag(&MediaRef::new("bad")), Err(BackendError::Protocol(_))));
}

#[test]
fn embeddings_are_unit_norm() {
    let mut f = ScriptFixture::default();
    f.embed.insert("x".into(), vec![1.0, 0.0]);
    f.embed.insert("y".into(), vec![0.0, 3.0]);
    f.embed.insert("z".into(), vec![1.0, 1.0]);
    f.embed.insert("zero".into(), vec![0.0, 0.0]);
    f.embed.insert("wide".into(), vec![1.0, 0.0, 0.0]);
    let c = client(f);
    let v = c.embed(&["x", "y", "z", "x"].map(String::from)).unwrap();
    for e in &v {
        assert_abs_diff_eq!(dot(e, e).sqrt(), 1.0, epsilon = 1e-12);
    }
    assert_abs_diff_eq!(dot(&v[0], &v[1]), 0.0);
    assert_abs_diff_eq!(dot(&v[0], &v[2]), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    assert_abs_diff_eq!(dot(&v[0], &v[3]), 1.0);
    assert!(matches!(c.embed(&["x".into(), "wide".into()]), Err(BackendError::Protocol(_))));
    assert!(matches!(c.embed(&["zero".into()]), Err(BackendError::Protocol(_))));
    assert!(matches!(c.embed(&[]), Err(BackendError::Argument(_))));
}

#[test]
fn hashed_bow_fallback_is_deterministic() {
    let f = ScriptFixture {
        embed_fallback: Some(EmbedFallback::HashedBow),
        ..Default::default()
    };
    let c = client(f);
    let a = c.embed(&["The cat sat.".into(), "the CAT sat".into()]).unwrap();
    assert_abs_diff_eq!(dot(&a[0], &a[1]), 1.0, epsilon = 1e-12);
    assert_eq!(a, c.embed(&["The cat sat.".into(), "the CAT sat".into()]).unwrap());
}

#[test]
fn completion_rules() {
    let f = ScriptFixture {
        complete: vec![
            CompleteRule::exact("exact prompt", "exact reply\n  with spacing "),
            CompleteRule::containing(["needle"], "cold").at_temperature(0.0),
            CompleteRule::containing(["needle"], "warm"),
        ],
        ..Default::default()
    };
    let c = client(f);
    assert_eq!(
        c.complete(&CompletionRequest::new("exact prompt", 0.0)).unwrap(),
        "exact reply\n  with spacing "
    );
    assert_eq!(c.complete(&CompletionRequest::detection("a needle here")).unwrap(), "cold");
    assert_eq!(c.complete(&CompletionRequest::explanation("a needle here", 1)).unwrap(), "warm");
    assert!(c.complete(&CompletionRequest::new("other", 0.0)).is_err());
    assert!(c.complete(&CompletionRequest::new("exact prompt", -1.0)).is_err());
}

#[test]
fn completion_by_hash() {
    let f = ScriptFixture {
        complete: vec![CompleteRule {
            prompt_sha256: Some(prompt_key("hashed")),
            reply: "by hash".into(),
            ..Default::default()
        }],
        ..Default::default()
    };
    assert_eq!(client(f).complete(&CompletionRequest::new("hashed", 0.3)).unwrap(), "by hash");
}

#[test]
fn temperature_defaults() {
    assert_eq!(CompletionRequest::detection("p").temperature, 0.0);
    assert_eq!(CompletionRequest::explanation("p", 3).temperature, 0.3);
    assert_eq!(DEFAULT_TOP_K, 5);
}

#[test]
fn named_completion_endpoints() {
    let default = ScriptFixture {
        complete: vec![CompleteRule::containing(["p"], "default")],
        ..Default::default()
    };
    let chat = ScriptFixture {
        complete: vec![CompleteRule::containing(["p"], "chat")],
        ..Default::default()
    };
    let c = client(default).with_named_completion("chat", Endpoint::from_transport(Arc::new(ScriptedTransport::new(chat))));
    let req = CompletionRequest::new("p", 0.3);
    assert_eq!(c.complete_on(None, &req).unwrap(), "default");
    assert_eq!(c.complete_on(Some("chat"), &req).unwrap(), "chat");
    assert!(matches!(c.complete_on(Some("nope"), &req), Err(BackendError::NotConfigured(_))));
}

#[test]
fn localize_sorts_and_truncates() {
    let cand = |s: f64, e: f64, score: f64| MomentCandidate { start_s: s, end_s: e, score };
    let f = ScriptFixture {
        localize: vec![LocalizeRule {
            video: "v".into(),
            query: None,
            query_contains: None,
            candidates: (0..7).map(|i| cand(i as f64, i as f64 + 1.0, i as f64 / 10.0)).collect(),
        }],
        ..Default::default()
    };
    let c = client(f);
    let out = c.localize(&MediaRef::new("v"), "anything", 5).unwrap();
    assert_eq!(out.len(), 5);
    assert!(out.windows(2).all(|w| w[0].score >= w[1].score));
    assert_eq!(out[0].start_s, 6.0);
    assert!(c.localize(&MediaRef::new("v"), "q", 0).is_err());
}

#[test]
fn fallback_localizer_ranks_matching_scene_first() {
    let mut f = ScriptFixture::default();
    f.embed.insert("a dog jumps into a pool".into(), vec![0.0, 1.0, 0.0]);
    f.embed.insert("a man reads".into(), vec![1.0, 0.0, 0.0]);
    f.embed.insert("a dog leaps into water".into(), vec![0.0, 1.0, 0.0]);
    f.embed.insert("credits roll".into(), vec![0.0, 0.0, 1.0]);
    let loc = FallbackLocalizer::new(client(f)).with_scenes(
        "v",
        vec![
            SceneCaption { start_s: 0.0, end_s: 3.0, caption: "a man reads".into() },
            SceneCaption { start_s: 3.0, end_s: 6.0, caption: "a dog leaps into water".into() },
            SceneCaption { start_s: 6.0, end_s: 8.0, caption: "credits roll".into() },
        ],
    );
    let out = loc.localize(&MediaRef::new("v"), "a dog jumps into a pool", 5).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!((out[0].start_s, out[0].end_s), (3.0, 6.0));
    assert_abs_diff_eq!(out[0].score, 1.0, epsilon = 1e-12);
    assert!(loc.localize(&MediaRef::new("missing"), "q", 5).is_err());
}

#[test]
fn scripted_transport_is_pure() {
    let t = ScriptedTransport::new(ScriptFixture {
        embed_fallback: Some(EmbedFallback::HashedBow),
        ..Default::default()
    });
    let body = serde_json::json!({"texts": ["alpha beta", "gamma"]});
    let a = serde_json::to_string(&t.call(BackendKind::Embed, &body).unwrap()).unwrap();
    let b = serde_json::to_string(&t.call(BackendKind::Embed, &body).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fixture_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mock.json");
    let f = ScriptFixture {
        complete: vec![CompleteRule::exact("p", "r")],
        ..Default::default()
    };
    std::fs::write(&path, serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(ScriptFixture::load(&path).unwrap(), f);
    std::fs::write(&path, r#"{"bogus": 1}"#).unwrap();
    assert!(ScriptFixture::load(&path).is_err());
}
