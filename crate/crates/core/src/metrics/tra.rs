use crate::error::{invalid, Result};
use crate::image::LabelImage;
use crate::track::TrackGraph;

/// Penalty weights of the graph edit operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraWeights {
    pub ns: f64,
    pub fn_: f64,
    pub fp: f64,
    pub ed: f64,
    pub ea: f64,
    pub ec: f64,
}

impl Default for TraWeights {
    fn default() -> Self {
        Self { ns: 5.0, fn_: 10.0, fp: 1.0, ed: 1.0, ea: 1.5, ec: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TraReport {
    pub ns: usize,
    pub fn_: usize,
    pub fp: usize,
    pub ed: usize,
    pub ea: usize,
    pub ec: usize,
    /// Weighted cost of turning the result into the reference.
    pub penalty: f64,
    /// Cost of building the reference from nothing.
    pub empty_cost: f64,
    pub tra: f64,
}

/// Tracking accuracy from the weighted graph edit cost. `matching[r]` lists
/// the reference nodes covered by result node `r`.
pub fn tra(gt: &TrackGraph, result: &TrackGraph, matching: &[Vec<usize>], w: TraWeights) -> Result<TraReport> {
    if gt.nodes().is_empty() {
        return invalid("reference graph is empty");
    }
    if matching.len() != result.nodes().len() {
        return invalid("matching must list every result node");
    }
    let mut rep = TraReport::default();
    let mut owner: Vec<Option<usize>> = vec![None; gt.nodes().len()];
    let mut rep_of: Vec<Option<usize>> = vec![None; result.nodes().len()];
    for (r, m) in matching.iter().enumerate() {
        let free: Vec<usize> = m.iter().copied().filter(|&g| owner[g].is_none()).collect();
        if free.is_empty() {
            rep.fp += 1;
            continue;
        }
        rep.ns += free.len() - 1;
        for &g in &free {
            owner[g] = Some(r);
        }
        rep_of[r] = Some(free[0]);
    }
    rep.fn_ = owner.iter().filter(|o| o.is_none()).count();
    let mut covered = vec![false; gt.edges().len()];
    for e in result.edges() {
        let hit = match (rep_of[e.from], rep_of[e.to]) {
            (Some(a), Some(b)) => gt.edges().iter().position(|g| g.from == a && g.to == b),
            _ => None,
        };
        match hit {
            Some(k) if !covered[k] => covered[k] = true,
            _ => rep.ed += 1,
        }
    }
    rep.ea = covered.iter().filter(|c| !**c).count();
    rep.penalty = w.ns * rep.ns as f64
        + w.fn_ * rep.fn_ as f64
        + w.fp * rep.fp as f64
        + w.ed * rep.ed as f64
        + w.ea * rep.ea as f64
        + w.ec * rep.ec as f64;
    rep.empty_cost = w.fn_ * gt.nodes().len() as f64 + w.ea * gt.edges().len() as f64;
    rep.tra = 1.0 - rep.penalty.min(rep.empty_cost) / rep.empty_cost;
    Ok(rep)
}

/// Matches result nodes to the reference object whose label region (in the
/// label volume of the same frame) contains the node position. Reference node
/// ids are label values.
pub fn match_by_labels(gt: &TrackGraph, result: &TrackGraph, labels: &[LabelImage]) -> Vec<Vec<usize>> {
    result
        .nodes()
        .iter()
        .map(|n| {
            let Some(lab) = labels.get(n.frame as usize) else { return Vec::new() };
            let g = lab.grid();
            let v = g.to_voxel(n.pos);
            if (0..3).any(|a| !(v[a] > -0.5 && v[a] < g.dims[a] as f64 - 0.5)) {
                return Vec::new();
            }
            let c = g.nearest_voxel(v);
            let l = lab.get(c[0], c[1], c[2]);
            if l == 0 {
                return Vec::new();
            }
            gt.node_index(n.frame, u64::from(l)).into_iter().collect()
        })
        .collect()
}
