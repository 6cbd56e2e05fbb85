use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::{Localizer, MediaRef, MomentCandidate, DEFAULT_TOP_K};
use crate::corpus::VideoRecord;
use crate::scalar::Scalar;

use super::EvalError;

pub const DEFAULT_TAUS: [f64; 2] = [0.3, 0.5];

/// Half-open time span with `start_s < end_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub start_s: T,
    pub end_s: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(start_s: T, end_s: T) -> Result<Self, EvalError> {
        if !(start_s < end_s) || !start_s.is_finite() || !end_s.is_finite() {
            return Err(EvalError::Argument(format!("invalid interval [{start_s}, {end_s}]")));
        }
        Ok(Self { start_s, end_s })
    }

    pub fn len(&self) -> T {
        self.end_s - self.start_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= T::zero()
    }
}

/// Intersection over union of two time spans.
pub fn temporal_iou<T: Scalar>(a: &Interval<T>, b: &Interval<T>) -> T {
    let inter = (a.end_s.min(b.end_s) - a.start_s.max(b.start_s)).max(T::zero());
    let union = a.len() + b.len() - inter;
    if union > T::zero() {
        inter / union
    } else {
        T::zero()
    }
}

/// Best IoU between any candidate and any gold moment; no candidates gives 0.
pub fn max_iou<T: Scalar>(candidates: &[Interval<T>], gold: &[Interval<T>]) -> Result<T, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::Argument("max_iou: no gold moments".into()));
    }
    Ok(candidates
        .iter()
        .flat_map(|c| gold.iter().map(move |g| temporal_iou(c, g)))
        .fold(T::zero(), T::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RqItem<T> {
    pub iou_g: T,
    pub iou_m: T,
}

/// `s = Σ (iou_g - iou_m) · 1(iou_m > tau)`; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationaleQuality<T> {
    pub tau: T,
    #[serde(rename = "S")]
    pub s: T,
    pub counted: usize,
    pub n: usize,
}

pub fn rationale_quality<T: Scalar>(items: &[RqItem<T>], tau: T) -> RationaleQuality<T> {
    let (s, counted) = items
        .iter()
        .filter(|it| it.iou_m > tau)
        .fold((T::zero(), 0), |(s, c), it| (s + (it.iou_g - it.iou_m), c + 1));
    RationaleQuality {
        tau,
        s,
        counted,
        n: items.len(),
    }
}

/// Gold reference: per-moment explanations joined in start-time order.
pub fn concat_moments(record: &VideoRecord) -> Result<String, EvalError> {
    if record.annotations.is_empty() {
        return Err(EvalError::Argument(format!("{}: no annotated moments", record.id)));
    }
    let mut moments: Vec<_> = record.annotations.iter().collect();
    moments.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    Ok(moments.iter().map(|m| m.explanation.trim()).collect::<Vec<_>>().join(" "))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RqItemReport {
    pub id: String,
    pub iou_g: f64,
    pub iou_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationaleEval {
    pub items: Vec<RqItemReport>,
    pub quality: Vec<RationaleQuality<f64>>,
    pub exclusions: Vec<Exclusion>,
}

fn to_intervals(c: &[MomentCandidate]) -> Vec<Interval<f64>> {
    c.iter().map(|m| Interval { start_s: m.start_s, end_s: m.end_s }).collect()
}

/// Localizes the gold and the model explanation of every test video and
/// scores how much worse the model's localization is. Ids without a model
/// explanation, gold record or gold moments are excluded and reported.
pub fn run_rationale_eval(
    test_ids: &[String],
    explanations: &BTreeMap<String, String>,
    gold: &[VideoRecord],
    localizer: &dyn Localizer,
    taus: &[f64],
) -> Result<RationaleEval, EvalError> {
    let by_id: BTreeMap<&str, &VideoRecord> = gold.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut ids: Vec<&String> = test_ids.iter().collect();
    ids.sort();
    ids.dedup();

    let mut exclusions = Vec::new();
    let mut work = Vec::new();
    for id in ids {
        let reason = match (by_id.get(id.as_str()), explanations.get(id)) {
            (None, _) => Some("no gold record"),
            (Some(r), _) if r.annotations.is_empty() => Some("no gold moments"),
            (_, None) => Some("no model explanation"),
            (_, Some(e)) if e.trim().is_empty() => Some("empty model explanation"),
            (Some(r), Some(e)) => {
                work.push((*r, e.as_str()));
                None
            }
        };
        if let Some(reason) = reason {
            exclusions.push(Exclusion { id: id.clone(), reason: reason.into() });
        }
    }

    let items = work
        .par_iter()
        .map(|(record, explanation)| -> Result<RqItemReport, EvalError> {
            let video = MediaRef::new(&record.id);
            let moments: Vec<Interval<f64>> = record
                .annotations
                .iter()
                .map(|m| Interval::new(m.start_s, m.end_s))
                .collect::<Result<_, _>>()?;
            let gold_text = concat_moments(record)?;
            let cand_g = localizer.localize(&video, &gold_text, DEFAULT_TOP_K)?;
            let cand_m = localizer.localize(&video, explanation, DEFAULT_TOP_K)?;
            let top = |c: &[MomentCandidate]| to_intervals(&c[..c.len().min(DEFAULT_TOP_K)]);
            Ok(RqItemReport {
                id: record.id.clone(),
                iou_g: max_iou(&top(&cand_g), &moments)?,
                iou_m: max_iou(&top(&cand_m), &moments)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let raw: Vec<RqItem<f64>> = items.iter().map(|i| RqItem { iou_g: i.iou_g, iou_m: i.iou_m }).collect();
    Ok(RationaleEval {
        quality: taus.iter().map(|&t| rationale_quality(&raw, t)).collect(),
        items,
        exclusions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn iv(a: f64, b: f64) -> Interval<f64> {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn iou_examples() {
        assert_eq!(temporal_iou(&iv(0.0, 10.0), &iv(0.0, 10.0)), 1.0);
        assert_eq!(temporal_iou(&iv(0.0, 4.0), &iv(6.0, 10.0)), 0.0);
        assert_abs_diff_eq!(temporal_iou(&iv(0.0, 6.0), &iv(3.0, 9.0)), 1.0 / 3.0, epsilon = 1e-12);
        assert!(Interval::new(2.0, 2.0).is_err());
    }

    #[test]
    fn max_iou_examples() {
        assert_eq!(max_iou(&[iv(1.0, 2.0)], &[iv(1.0, 2.0)]).unwrap(), 1.0);
        assert_abs_diff_eq!(max_iou(&[iv(0.0, 2.0), iv(5.0, 9.0)], &[iv(4.0, 8.0)]).unwrap(), 0.6, epsilon = 1e-12);
        assert_eq!(max_iou(&[], &[iv(4.0, 8.0)]).unwrap(), 0.0);
        assert!(max_iou(&[iv(0.0, 1.0)], &[]).is_err());
    }

    #[test]
    fn rq_examples() {
        let items = [RqItem { iou_g: 0.8, iou_m: 0.5 }, RqItem { iou_g: 0.9, iou_m: 0.2 }];
        let q = rationale_quality(&items, 0.3);
        assert_abs_diff_eq!(q.s, 0.3, epsilon = 1e-12);
        assert_eq!((q.counted, q.n), (1, 2));
    }

    #[test]
    fn concat_orders_by_start() {
        let r = VideoRecord::new("v", 10.0).with_moment(5.0, 6.0, "B.").with_moment(1.0, 2.0, "A.");
        assert_eq!(concat_moments(&r).unwrap(), "A. B.");
        assert!(concat_moments(&VideoRecord::new("w", 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn iou_properties(a in 0.0f64..50.0, la in 0.01f64..20.0, b in 0.0f64..50.0, lb in 0.01f64..20.0) {
            let x = iv(a, a + la);
            let y = iv(b, b + lb);
            let i = temporal_iou(&x, &y);
            prop_assert_eq!(i, temporal_iou(&y, &x));
            prop_assert!((0.0..=1.0).contains(&i));
            let disjoint = x.end_s <= y.start_s || y.end_s <= x.start_s;
            prop_assert_eq!(i == 0.0, disjoint);
            prop_assert_eq!(temporal_iou(&x, &x), 1.0);
        }

        #[test]
        fn gold_vs_gold_is_zero(ious in prop::collection::vec(0.0f64..=1.0, 0..30), tau in 0.0f64..1.0) {
            let items: Vec<_> = ious.iter().map(|&v| RqItem { iou_g: v, iou_m: v }).collect();
            prop_assert_eq!(rationale_quality(&items, tau).s, 0.0);
        }

        #[test]
        fn f32_matches_f64(a in 0.0f32..50.0, la in 0.5f32..20.0, b in 0.0f32..50.0, lb in 0.5f32..20.0) {
            let x32 = temporal_iou(&Interval { start_s: a, end_s: a + la }, &Interval { start_s: b, end_s: b + lb });
            let x64 = temporal_iou(
                &iv(a as f64, (a + la) as f64),
                &iv(b as f64, (b + lb) as f64),
            );
            prop_assert!((x32 as f64 - x64).abs() < 1e-4);
        }
    }
}
