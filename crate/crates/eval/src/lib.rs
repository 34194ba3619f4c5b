//! Evaluation of parsed actions.
//!
//! Detections are matched to ground truth by volume overlap: a detection is
//! correct when enough of its own volume lies inside a ground truth of the
//! same category, and a ground truth is retrieved when enough of its volume
//! is covered. Per-category average precision uses the monotone precision
//! envelope. Attribute predictions are scored by ROC AUC per attribute.

pub mod attributes;
pub mod clips;
pub mod detection;
pub mod report;

pub use attributes::{attribute_report, roc_auc, roc_auc_pairs, roc_auc_ranks, AttributeReport, AttributeSample, LevelReport};
pub use clips::{evaluate_clips, ClipReport};
pub use detection::{
    average_precision, detection_report, ground_truth_from_manifest, map_score, match_detections, pr_curve, score_order,
    CategoryResult, GroundTruth, MatchResult, MatchRule,
};
pub use report::{evaluate, AttributeSource, EvalConfig, EvalReport};
