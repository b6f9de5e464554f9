//! Anchor-data generation, construction of intermediate shares, and the
//! per-party maps that align shares into one collaborative space.

mod anchor;
mod collaborate;
mod share;

pub use anchor::{generate_anchor, pooled_bounds, AnchorData};
pub use collaborate::{
    build_collaborative_dataset, fit_collaboration, fit_collaboration_with, CollaborationMaps,
    CollaborativeDataset, TargetScaling,
};
pub use share::{make_intermediate_share, IntermediateShare, ShareEnvelope};
