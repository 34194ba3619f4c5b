//! Training samples for the detection stage, cut from full videos at
//! proposal locations.

use rand::seq::SliceRandom;

use actparse_core::model::{LocMode, Target};
use actparse_core::{rng, Error, Result};
use actparse_data::{ActionAnnotation, Cuboid, TensorDataset};
use actparse_motion::AppearanceMotionClip;

use crate::parse::proposal_batch;
use crate::proposals::Proposal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalSampling {
    /// A proposal with at least this IoU against a ground truth takes its
    /// labels.
    pub positive_iou: f64,
    /// A proposal whose best IoU stays below this is background.
    pub background_iou: f64,
    /// Background samples kept per positive sample.
    pub background_ratio: f64,
    /// Also train on the ground-truth volumes themselves.
    pub include_ground_truth: bool,
}

impl Default for ProposalSampling {
    fn default() -> Self {
        ProposalSampling {
            positive_iou: 0.5,
            background_iou: 0.1,
            background_ratio: 1.0,
            include_ground_truth: true,
        }
    }
}

/// Offset from a proposal centre to an action centre, in the model's units.
pub fn loc_target(proposal: &Cuboid, action: &Cuboid, mode: LocMode) -> [f32; 2] {
    let (dx, dy) = (action.cx - proposal.cx, action.cy - proposal.cy);
    match mode {
        LocMode::Normalized => [(dx / proposal.w) as f32, (dy / proposal.h) as f32],
        LocMode::RawPixels => [dx as f32, dy as f32],
    }
}

/// Labelled proposal volumes of one video. Background samples carry the
/// background class, a zero offset and all attributes off.
pub fn label_proposals(
    ground_truth: &[ActionAnnotation],
    proposals: &[Proposal],
    background_class: usize,
    loc_mode: LocMode,
    sampling: &ProposalSampling,
    seed: u64,
) -> Vec<(Cuboid, Target)> {
    let mut positives = Vec::new();
    let mut background = Vec::new();
    let mut candidates: Vec<Cuboid> = proposals.iter().map(|p| p.volume).collect();
    if sampling.include_ground_truth {
        candidates.extend(ground_truth.iter().map(|g| g.volume));
    }
    for v in candidates {
        let best = ground_truth
            .iter()
            .map(|g| (v.iou(&g.volume), g))
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((iou, g)) if iou >= sampling.positive_iou => positives.push((
                v,
                Target {
                    category: g.category_id,
                    h1: g.h1.to_vec(),
                    h2: g.h2.to_vec(),
                    loc: loc_target(&v, &g.volume, loc_mode),
                },
            )),
            Some((iou, _)) if iou >= sampling.background_iou => {}
            _ => background.push((
                v,
                Target {
                    category: background_class,
                    h1: vec![false; ground_truth.first().map_or(19, |g| g.h1.len())],
                    h2: vec![false; ground_truth.first().map_or(14, |g| g.h2.len())],
                    loc: [0.0, 0.0],
                },
            )),
        }
    }
    let keep = ((positives.len() as f64) * sampling.background_ratio).round() as usize;
    background.shuffle(&mut rng::stream(seed, 0));
    background.truncate(keep.max(1).min(background.len()));
    positives.extend(background);
    positives
}

/// Cuts and warps every labelled volume of one composed video into `out`.
pub fn append_samples(am: &AppearanceMotionClip, labelled: &[(Cuboid, Target)], extents: [usize; 3], out: &mut TensorDataset) -> Result<()> {
    for (v, target) in labelled {
        let batch = proposal_batch(am, &[v], extents)?;
        let dims = batch.dims()[1..].to_vec();
        let input = batch.reshape(&dims).map_err(|e| Error::shape(format!("proposal sample: {e}")))?;
        out.push(input, target.clone());
    }
    Ok(())
}
