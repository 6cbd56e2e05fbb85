//! Corpus curation and evaluation toolkit for multimodal video-humor
//! explanation.
//!
//! Model calls go through [`backends::Client`]; everything else is
//! deterministic given its inputs.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod backends;
pub mod corpus;
pub mod evalkit;
pub mod filterpipe;
pub mod promptforge;
pub mod scalar;
pub mod segmenter;

pub use scalar::Scalar;

pub type Interval = evalkit::Interval<f64>;
pub type Interval32 = evalkit::Interval<f32>;
pub type Segment = segmenter::Segment<f64>;
pub type Segment32 = segmenter::Segment<f32>;
pub type FrameFeature = segmenter::FrameFeature<f64>;
pub type FrameFeature32 = segmenter::FrameFeature<f32>;
pub type ScoreReport = evalkit::ScoreReport<f64>;
pub type RationaleQuality = evalkit::RationaleQuality<f64>;
pub type RqItem = evalkit::RqItem<f64>;
pub type RatingRecord = evalkit::RatingRecord<f64>;
pub type TaxonomyRow = evalkit::TaxonomyRow<f64>;
