//! Multi-action parsing: candidate volumes go through the network, get
//! their centres refined, and are pruned by per-category non-maximum
//! suppression.

pub mod detection;
pub mod finetune;
pub mod parse;
pub mod proposals;

pub use detection::{detections_from_text, detections_to_text, load_detections, nms, refine_location, write_detections, Detection};
pub use finetune::{append_samples, label_proposals, loc_target, ProposalSampling};
pub use parse::{extract_subvolume, parse_video, parse_volume, proposal_batch, score_proposals, video_volume, ParseConfig};
pub use proposals::{
    clip_to_video, load_proposals, proposals_from_text, proposals_to_text, sliding_window_proposals, write_proposals, Proposal,
    WindowConfig,
};
