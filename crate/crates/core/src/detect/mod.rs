//! Message-passing detection and the turbo receiver.

mod spa;
mod turbo;

pub(crate) use spa::check_inputs;
pub use spa::{
    generic_sparse_spa, hard_decision, neighbor_sets, spa_detect, Detection, DetectorGeometry, NeighborSets,
    SoftDetector, SpaDetector, SpaParams, SUPPORT_THRESHOLD,
};
pub use turbo::{turbo_decode, turbo_decode_with, IterationStats, TurboOutput};
