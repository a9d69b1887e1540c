use super::histogram::IntersectionHistogram;

/// Object level agreement derived from an intersection histogram.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TopologyReport {
    pub reference_objects: usize,
    pub segmented_objects: usize,
    /// Reference objects covered by more than one segment.
    pub split: usize,
    /// Segments covering more than one reference object.
    pub merged: usize,
    /// Segments lying mostly on reference background.
    pub spurious: usize,
    /// Reference objects lying mostly on segmentation background.
    pub missing: usize,
    /// Reference objects matched one-to-one.
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 { 0.0 } else { n as f64 / d as f64 }
}

/// Split, merged, spurious and missing counts plus detection scores.
///
/// False positives are split plus spurious objects, false negatives merged
/// plus missing ones. Zero denominators give 0.
pub fn topo_errors(h: &IntersectionHistogram) -> TopologyReport {
    let columns = h.columns();
    let fg = |v: &[(u32, u64)]| v.iter().filter(|(k, n)| *k != 0 && *n > 0).count();
    // the background entry must strictly dominate every object entry
    let bg_dominates = |v: &[(u32, u64)]| {
        let bg = v.iter().find(|(k, _)| *k == 0).map_or(0, |(_, n)| *n);
        bg > 0 && v.iter().filter(|(k, _)| *k != 0).all(|(_, n)| *n < bg)
    };
    let mut r = TopologyReport::default();
    let mut merged_cols = std::collections::BTreeSet::new();
    for (&j, entries) in columns.iter().filter(|(&j, _)| j != 0) {
        r.segmented_objects += 1;
        if fg(entries) > 1 {
            r.merged += 1;
            merged_cols.insert(j);
        }
        if bg_dominates(entries) {
            r.spurious += 1;
        }
    }
    for &i in h.row_sums().keys().filter(|&&i| i != 0) {
        r.reference_objects += 1;
        let row = h.row(i);
        let n_fg = fg(&row);
        if n_fg > 1 {
            r.split += 1;
        }
        let missing = bg_dominates(&row);
        if missing {
            r.missing += 1;
        }
        if n_fg == 1 && !missing {
            let j = row.iter().find(|(k, _)| *k != 0).unwrap().0;
            if !merged_cols.contains(&j) {
                r.tp += 1;
            }
        }
    }
    r.fp = r.split + r.spurious;
    r.fn_ = r.merged + r.missing;
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn_);
    r.f_score = super::f_score(r.precision, r.recall);
    r
}
