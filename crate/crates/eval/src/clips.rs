//! Scores for models run on pre-cut clips, one action per clip.

use actparse_core::model::{ModelOutput, Target};
use actparse_core::{Error, Result};

use crate::attributes::{attribute_report, AttributeReport, AttributeSample};

#[derive(Debug, Clone, PartialEq)]
pub struct ClipReport {
    pub samples: usize,
    pub accuracy: f64,
    /// Mean of `|Δx|` and `|Δy|` in the model's location units.
    pub loc_mae: f64,
    pub attributes: AttributeReport,
}

pub fn evaluate_clips(outputs: &[ModelOutput], targets: &[Target], hit_threshold: f64) -> Result<ClipReport> {
    if outputs.len() != targets.len() {
        return Err(Error::arg(format!("{} outputs for {} targets", outputs.len(), targets.len())));
    }
    if outputs.is_empty() {
        return Err(Error::arg("nothing to evaluate"));
    }
    let n = outputs.len() as f64;
    let correct = outputs.iter().zip(targets).filter(|(o, t)| o.argmax_class() == t.category).count();
    let loc_err: f64 = outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| (f64::from(o.loc[0] - t.loc[0]).abs() + f64::from(o.loc[1] - t.loc[1]).abs()) / 2.0)
        .sum();
    let samples: Vec<AttributeSample> = outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| AttributeSample {
            h1_probs: o.h1_probs.clone(),
            h2_probs: o.h2_probs.clone(),
            h1: t.h1.clone(),
            h2: t.h2.clone(),
        })
        .collect();
    Ok(ClipReport {
        samples: outputs.len(),
        accuracy: correct as f64 / n,
        loc_mae: loc_err / n,
        attributes: attribute_report(&samples, hit_threshold),
    })
}
