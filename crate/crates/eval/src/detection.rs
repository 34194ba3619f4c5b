//! Detection matching under volume-overlap rules and average precision.

use std::collections::BTreeMap;

use actparse_core::{Error, Result};
use actparse_data::{ActionAnnotation, DatasetManifest};
use actparse_parse::Detection;

/// How much overlap counts as a hit. Precision divides the intersection by
/// the detection's volume, recall by the ground truth's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchRule {
    pub precision_fraction: f64,
    pub recall_fraction: f64,
}

impl Default for MatchRule {
    fn default() -> Self {
        MatchRule {
            precision_fraction: 0.125,
            recall_fraction: 0.125,
        }
    }
}

impl MatchRule {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("precision", self.precision_fraction), ("recall", self.recall_fraction)] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::arg(format!("{name} fraction must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }
}

/// An annotated action of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub video_id: String,
    pub annotation: ActionAnnotation,
}

/// Ground truths keyed by the manifest path of their video.
pub fn ground_truth_from_manifest(manifest: &DatasetManifest) -> Vec<GroundTruth> {
    manifest
        .entries
        .iter()
        .map(|e| GroundTruth {
            video_id: e.path.clone(),
            annotation: e.annotation.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Per detection, in input order.
    pub true_positive: Vec<bool>,
    /// The ground truth each true positive claimed.
    pub claimed: Vec<Option<usize>>,
    /// Per ground truth: overlapped enough by some detection of its
    /// category.
    pub covered: Vec<bool>,
}

/// Indices of `detections` by descending score, ties in input order.
pub fn score_order(detections: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score));
    order
}

/// Greedy matching. Detections are visited by descending score; each claims
/// the unclaimed same-video, same-category ground truth it overlaps most,
/// provided the overlap is at least `precision_fraction` of its own volume.
pub fn match_detections(detections: &[Detection], ground_truths: &[GroundTruth], rule: &MatchRule) -> MatchResult {
    let mut true_positive = vec![false; detections.len()];
    let mut claimed = vec![None; detections.len()];
    let mut taken = vec![false; ground_truths.len()];
    for i in score_order(detections) {
        let d = &detections[i];
        let dv = d.volume.volume();
        let mut best: Option<(f64, usize)> = None;
        for (g, gt) in ground_truths.iter().enumerate() {
            if taken[g] || gt.video_id != d.video_id || gt.annotation.category_id != d.category {
                continue;
            }
            let frac = d.volume.intersection_volume(&gt.annotation.volume) / dv;
            if frac >= rule.precision_fraction && best.is_none_or(|(b, _)| frac > b) {
                best = Some((frac, g));
            }
        }
        if let Some((_, g)) = best {
            taken[g] = true;
            true_positive[i] = true;
            claimed[i] = Some(g);
        }
    }
    let covered = ground_truths
        .iter()
        .map(|gt| {
            let gv = gt.annotation.volume.volume();
            detections.iter().any(|d| {
                d.video_id == gt.video_id
                    && d.category == gt.annotation.category_id
                    && d.volume.intersection_volume(&gt.annotation.volume) / gv >= rule.recall_fraction
            })
        })
        .collect();
    MatchResult {
        true_positive,
        claimed,
        covered,
    }
}

/// `(recall, precision)` after each ranked detection.
pub fn pr_curve(ranked_tp: &[bool], num_ground_truths: usize) -> Vec<(f64, f64)> {
    let mut tp = 0usize;
    ranked_tp
        .iter()
        .enumerate()
        .map(|(k, &hit)| {
            tp += usize::from(hit);
            let recall = if num_ground_truths == 0 { 0.0 } else { tp as f64 / num_ground_truths as f64 };
            (recall, tp as f64 / (k + 1) as f64)
        })
        .collect()
}

/// All-points average precision with the precision made monotone
/// non-increasing in recall. Zero when there is nothing to find.
pub fn average_precision(ranked_tp: &[bool], num_ground_truths: usize) -> f64 {
    if num_ground_truths == 0 {
        return 0.0;
    }
    let curve = pr_curve(ranked_tp, num_ground_truths);
    let mut envelope = vec![0f64; curve.len()];
    let mut best = 0f64;
    for k in (0..curve.len()).rev() {
        best = best.max(curve[k].1);
        envelope[k] = best;
    }
    let sum: f64 = ranked_tp
        .iter()
        .zip(&envelope)
        .filter(|(&hit, _)| hit)
        .map(|(_, &p)| p)
        .sum();
    (sum / num_ground_truths as f64).min(1.0)
}

/// Unweighted mean of per-category APs.
pub fn map_score(aps: &BTreeMap<usize, f64>) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::arg("no categories to average"));
    }
    Ok(aps.values().sum::<f64>() / aps.len() as f64)
}

/// Per-category detection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryResult {
    pub category: usize,
    pub num_ground_truths: usize,
    pub num_detections: usize,
    pub true_positives: usize,
    pub covered: usize,
    pub ap: f64,
    pub pr_curve: Vec<(f64, f64)>,
}

/// APs of every category that has ground truth. Detections of other
/// categories only count as false positives there, so they do not enter the
/// mean.
pub fn detection_report(detections: &[Detection], ground_truths: &[GroundTruth], rule: &MatchRule) -> Result<(Vec<CategoryResult>, MatchResult)> {
    rule.validate()?;
    let m = match_detections(detections, ground_truths, rule);
    let mut cats: BTreeMap<usize, usize> = BTreeMap::new();
    for g in ground_truths {
        *cats.entry(g.annotation.category_id).or_default() += 1;
    }
    let order = score_order(detections);
    let mut out = Vec::new();
    for (&c, &n_gt) in &cats {
        let ranked: Vec<bool> = order
            .iter()
            .filter(|&&i| detections[i].category == c)
            .map(|&i| m.true_positive[i])
            .collect();
        let covered = ground_truths
            .iter()
            .zip(&m.covered)
            .filter(|(g, &cv)| cv && g.annotation.category_id == c)
            .count();
        out.push(CategoryResult {
            category: c,
            num_ground_truths: n_gt,
            num_detections: ranked.len(),
            true_positives: ranked.iter().filter(|&&b| b).count(),
            covered,
            ap: average_precision(&ranked, n_gt),
            pr_curve: pr_curve(&ranked, n_gt),
        });
    }
    Ok((out, m))
}
