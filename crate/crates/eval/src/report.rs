//! The full evaluation of a detection file and its text renderings.

use std::fmt::Write as _;

use actparse_core::Result;
use actparse_parse::Detection;

use crate::attributes::{attribute_report, AttributeReport, AttributeSample, LevelReport};
use crate::detection::{detection_report, map_score, CategoryResult, GroundTruth, MatchRule};

/// Which pairs feed the attribute AUCs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeSource {
    /// Each true-positive detection against the ground truth it claimed.
    MatchedDetections,
    /// Skip attribute scoring.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub rule: MatchRule,
    pub hit_threshold: f64,
    pub attributes: AttributeSource,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            rule: MatchRule::default(),
            hit_threshold: 0.6,
            attributes: AttributeSource::MatchedDetections,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub categories: Vec<CategoryResult>,
    pub map: f64,
    pub attributes: Option<AttributeReport>,
}

pub fn evaluate(detections: &[Detection], ground_truths: &[GroundTruth], config: &EvalConfig) -> Result<EvalReport> {
    let (categories, matched) = detection_report(detections, ground_truths, &config.rule)?;
    let map = map_score(&categories.iter().map(|c| (c.category, c.ap)).collect())?;
    let attributes = match config.attributes {
        AttributeSource::None => None,
        AttributeSource::MatchedDetections => {
            let samples: Vec<AttributeSample> = detections
                .iter()
                .zip(&matched.claimed)
                .filter_map(|(d, g)| g.map(|g| (d, &ground_truths[g].annotation)))
                .map(|(d, a)| AttributeSample {
                    h1_probs: d.h1_probs.clone(),
                    h2_probs: d.h2_probs.clone(),
                    h1: a.h1.to_vec(),
                    h2: a.h2.to_vec(),
                })
                .collect();
            Some(attribute_report(&samples, config.hit_threshold))
        }
    };
    Ok(EvalReport {
        config: *config,
        categories,
        map,
        attributes,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

impl EvalReport {
    /// Fixed-width summary for a terminal.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let r = &self.config.rule;
        let _ = writeln!(
            s,
            "overlap rule: precision {:.4} of detection volume, recall {:.4} of ground-truth volume",
            r.precision_fraction, r.recall_fraction
        );
        let _ = writeln!(s, "{:>8} {:>6} {:>6} {:>6} {:>8} {:>8}", "category", "gt", "det", "tp", "covered", "AP");
        for c in &self.categories {
            let _ = writeln!(
                s,
                "{:>8} {:>6} {:>6} {:>6} {:>8} {:>8.4}",
                c.category, c.num_ground_truths, c.num_detections, c.true_positives, c.covered, c.ap
            );
        }
        let _ = writeln!(s, "MAP {:.4}", self.map);
        if let Some(a) = &self.attributes {
            let _ = writeln!(s, "attributes on {} matched detections, hit threshold {}", a.samples, a.hit_threshold);
            for (name, level) in [("H1", &a.h1), ("H2", &a.h2)] {
                let _ = writeln!(
                    s,
                    "{name}: mean AUC {} std {} hits {}/{} (defined {})",
                    opt(level.mean_auc),
                    opt(level.std_auc),
                    level.hits,
                    level.names.len(),
                    level.defined
                );
            }
        }
        s
    }

    pub fn categories_csv(&self) -> String {
        let mut s = String::from("category,num_gt,num_det,tp,covered,ap\n");
        for c in &self.categories {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.6}",
                c.category, c.num_ground_truths, c.num_detections, c.true_positives, c.covered, c.ap
            );
        }
        let _ = writeln!(s, "MAP,,,,,{:.6}", self.map);
        s
    }

    /// One row per attribute, both levels.
    pub fn attributes_csv(&self) -> String {
        let mut s = String::from("level,index,name,auc,hit\n");
        if let Some(a) = &self.attributes {
            for (name, level) in [("H1", &a.h1), ("H2", &a.h2)] {
                write_level(&mut s, name, level, a.hit_threshold);
            }
        }
        s
    }

    pub fn pr_csv(&self) -> String {
        let mut s = String::from("category,rank,recall,precision\n");
        for c in &self.categories {
            for (k, (r, p)) in c.pr_curve.iter().enumerate() {
                let _ = writeln!(s, "{},{},{:.6},{:.6}", c.category, k + 1, r, p);
            }
        }
        s
    }
}

fn write_level(s: &mut String, level_name: &str, level: &LevelReport, threshold: f64) {
    for (i, (name, auc)) in level.names.iter().zip(&level.aucs).enumerate() {
        let hit = match auc {
            Some(v) => u8::from(*v >= threshold).to_string(),
            None => "-".into(),
        };
        let auc = auc.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(s, "{level_name},{i},{name},{auc},{hit}");
    }
}
