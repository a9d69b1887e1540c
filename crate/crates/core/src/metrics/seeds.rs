use crate::image::LabelImage;

/// Detection quality of seed points against a reference label volume.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SeedEvaluation {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Mean physical distance of true positive seeds to their object centroid.
    pub avg_dist: f64,
}

/// Scores seeds given in voxel coordinates. An object hit by at least one
/// seed is a true positive (the seed closest to its centroid); additional
/// hits and seeds on background or outside the volume are false positives.
pub fn seed_eval(seeds: &[[f64; 3]], truth: &LabelImage) -> SeedEvaluation {
    let g = *truth.grid();
    let centroids: std::collections::BTreeMap<u32, [f64; 3]> =
        truth.regions().into_iter().map(|r| (r.label, g.to_physical(r.centroid()))).collect();
    let mut best: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    let mut hits = 0usize;
    let mut fp = 0usize;
    for p in seeds {
        let inside = (0..3).all(|a| p[a].is_finite() && p[a] > -0.5 && p[a] < g.dims[a] as f64 - 0.5);
        let label = if inside {
            let v = g.nearest_voxel(*p);
            truth.get(v[0], v[1], v[2])
        } else {
            0
        };
        if label == 0 {
            fp += 1;
            continue;
        }
        hits += 1;
        let c = centroids[&label];
        let q = g.to_physical(*p);
        let d = ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2) + (q[2] - c[2]).powi(2)).sqrt();
        let e = best.entry(label).or_insert(f64::INFINITY);
        *e = e.min(d);
    }
    let tp = best.len();
    fp += hits - tp;
    let fn_ = centroids.len() - tp;
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f_score = super::f_score(precision, recall);
    let avg_dist = if tp == 0 { 0.0 } else { best.values().sum::<f64>() / tp as f64 };
    SeedEvaluation { tp, fp, fn_, precision, recall, f_score, avg_dist }
}
