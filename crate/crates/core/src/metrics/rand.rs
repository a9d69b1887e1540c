use super::histogram::IntersectionHistogram;

/// Voxel pair agreement counts between two labelings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCounts {
    /// Pairs together in both.
    pub a: u128,
    /// Together in the reference only.
    pub b: u128,
    /// Together in the segmentation only.
    pub c: u128,
    /// Apart in both.
    pub d: u128,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandJaccard {
    pub counts: PairCounts,
    pub rand_index: f64,
    /// `(a + d) / (b + c + d)`; exceeds 1 for good agreement.
    pub jaccard_index: f64,
    /// Set when a denominator was zero and the index was reported as 0.
    pub degenerate: bool,
}

#[inline]
fn choose2(n: u64) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

pub fn pair_counts(h: &IntersectionHistogram) -> PairCounts {
    let a: u128 = h.cells().map(|(_, n)| choose2(n)).sum();
    let rows: u128 = h.row_sums().values().map(|&n| choose2(n)).sum();
    let cols: u128 = h.col_sums().values().map(|&n| choose2(n)).sum();
    let all = choose2(h.total());
    let b = rows - a;
    let c = cols - a;
    PairCounts { a, b, c, d: all - a - b - c }
}

pub fn rand_jaccard_from_counts(counts: PairCounts) -> RandJaccard {
    let PairCounts { a, b, c, d } = counts;
    let num = (a + d) as f64;
    let ri_den = (a + b + c + d) as f64;
    let ji_den = (b + c + d) as f64;
    let degenerate = ri_den == 0.0 || ji_den == 0.0;
    RandJaccard {
        counts,
        rand_index: if ri_den == 0.0 { 0.0 } else { num / ri_den },
        jaccard_index: if ji_den == 0.0 { 0.0 } else { num / ji_den },
        degenerate,
    }
}

/// Rand and Jaccard indices of the labelings summarized by `h`.
pub fn rand_jaccard(h: &IntersectionHistogram) -> RandJaccard {
    rand_jaccard_from_counts(pair_counts(h))
}
