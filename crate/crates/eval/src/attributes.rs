//! Ranking quality of attribute probabilities.

/// Above this many positive-negative pairs the rank-sum path is used.
const PAIR_LIMIT: usize = 1 << 20;

/// Area under the ROC curve as P(score of a positive > score of a negative),
/// ties counting one half. `None` when either class is absent.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 || scores.len() != labels.len() {
        return None;
    }
    if pos * neg <= PAIR_LIMIT {
        roc_auc_pairs(scores, labels)
    } else {
        roc_auc_ranks(scores, labels)
    }
}

/// Exhaustive pair counting.
pub fn roc_auc_pairs(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0u64; // doubled, so ties add 1
    let mut pairs = 0u64;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1;
            wins += match si.total_cmp(&sj) {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    (pairs > 0).then(|| wins as f64 / (2 * pairs) as f64)
}

/// Mann-Whitney U from mid-ranks, `O(n log n)`.
pub fn roc_auc_ranks(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n = scores.len();
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]].total_cmp(&scores[order[i]]).is_eq() {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos * neg) as f64)
}

/// AUCs of one attribute level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub names: Vec<String>,
    /// `None` for attributes whose labels are constant over the samples.
    pub aucs: Vec<Option<f64>>,
    pub mean_auc: Option<f64>,
    pub std_auc: Option<f64>,
    /// Attributes with AUC at or above the hit threshold.
    pub hits: usize,
    /// Attributes with a defined AUC.
    pub defined: usize,
}

impl LevelReport {
    /// `probs[i][a]` and `labels[i][a]` for sample `i`, attribute `a`.
    pub fn compute(names: &[&str], probs: &[Vec<f32>], labels: &[Vec<bool>], hit_threshold: f64) -> Self {
        let aucs: Vec<Option<f64>> = (0..names.len())
            .map(|a| {
                let s: Vec<f64> = probs.iter().map(|p| f64::from(p[a])).collect();
                let l: Vec<bool> = labels.iter().map(|b| b[a]).collect();
                roc_auc(&s, &l)
            })
            .collect();
        let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
        let (mean_auc, std_auc) = if defined.is_empty() {
            (None, None)
        } else {
            let n = defined.len() as f64;
            let mean = defined.iter().sum::<f64>() / n;
            let var = defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (Some(mean), Some(var.sqrt()))
        };
        LevelReport {
            names: names.iter().map(|s| s.to_string()).collect(),
            hits: defined.iter().filter(|&&v| v >= hit_threshold).count(),
            defined: defined.len(),
            aucs,
            mean_auc,
            std_auc,
        }
    }
}

/// Attribute AUCs at both levels.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeReport {
    pub hit_threshold: f64,
    pub samples: usize,
    pub h1: LevelReport,
    pub h2: LevelReport,
}

/// Predicted probabilities next to the true bits of one action.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSample {
    pub h1_probs: Vec<f32>,
    pub h2_probs: Vec<f32>,
    pub h1: Vec<bool>,
    pub h2: Vec<bool>,
}

pub fn attribute_report(samples: &[AttributeSample], hit_threshold: f64) -> AttributeReport {
    let h1_names: Vec<&str> = actparse_data::H1_NAMES.to_vec();
    let h2_names: Vec<&str> = actparse_data::H2_NAMES.to_vec();
    let col = |f: fn(&AttributeSample) -> &Vec<f32>| samples.iter().map(|s| f(s).clone()).collect::<Vec<_>>();
    let bits = |f: fn(&AttributeSample) -> &Vec<bool>| samples.iter().map(|s| f(s).clone()).collect::<Vec<_>>();
    AttributeReport {
        hit_threshold,
        samples: samples.len(),
        h1: LevelReport::compute(&h1_names, &col(|s| &s.h1_probs), &bits(|s| &s.h1), hit_threshold),
        h2: LevelReport::compute(&h2_names, &col(|s| &s.h2_probs), &bits(|s| &s.h2), hit_threshold),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(roc_auc(&[0.9, 0.4, 0.6, 0.1], &[true, false, true, false]), Some(1.0));
        assert_eq!(roc_auc(&[0.9, 0.6, 0.4, 0.1], &[true, false, true, false]), Some(0.75));
        assert_eq!(roc_auc(&[0.3; 6], &[true, false, true, false, true, true]), Some(0.5));
        assert_eq!(roc_auc(&[0.1, 0.2], &[true, true]), None);
    }

    #[test]
    fn rank_path_agrees_with_pairs() {
        let s = [0.1, 0.5, 0.5, 0.3, 0.9, 0.5, 0.2];
        let l = [false, true, false, true, true, false, false];
        let a = roc_auc_pairs(&s, &l).unwrap();
        let b = roc_auc_ranks(&s, &l).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
