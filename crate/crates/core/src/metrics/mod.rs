//! Detection, segmentation and tracking quality measures.

mod distance;
mod histogram;
mod quality;
mod rand;
mod seeds;
mod topology;
mod tra;

pub use distance::{nsd_hausdorff, DistanceReport};
pub use histogram::IntersectionHistogram;
pub use quality::{image_quality, ImageQuality};
pub use rand::{pair_counts, rand_jaccard, rand_jaccard_from_counts, PairCounts, RandJaccard};
pub use seeds::{seed_eval, SeedEvaluation};
pub use topology::{topo_errors, TopologyReport};
pub use tra::{match_by_labels, tra, TraReport, TraWeights};

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
