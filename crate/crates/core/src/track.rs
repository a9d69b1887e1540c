//! Nearest-neighbour tracking, single-frame gap repair and tracklet linking.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::fuzzy::propagate;
use crate::table::FeatureTable;

/// Node ids at or above this value stand for seeds carried in place of an uncertain segment.
pub const SEED_NODE_BASE: u64 = 1 << 40;
/// Node ids at or above this value were interpolated by gap repair.
pub const INTERPOLATED_NODE_BASE: u64 = 1 << 48;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackPoint {
    pub id: u64,
    /// Physical position.
    pub pos: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackNode {
    pub frame: u32,
    pub id: u64,
    pub pos: [f64; 3],
    pub interpolated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrackEdge {
    pub from: usize,
    pub to: usize,
    pub interpolated: bool,
}

/// Directed acyclic graph of detections; edges point forward in time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrackGraph {
    nodes: Vec<TrackNode>,
    edges: Vec<TrackEdge>,
    index: BTreeMap<(u32, u64), usize>,
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl TrackGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: TrackNode) -> Result<usize> {
        if self.index.contains_key(&(node.frame, node.id)) {
            return invalid(format!("duplicate node {} in frame {}", node.id, node.frame));
        }
        let k = self.nodes.len();
        self.index.insert((node.frame, node.id), k);
        self.nodes.push(node);
        Ok(k)
    }

    pub fn add_edge(&mut self, from: usize, to: usize, interpolated: bool) -> Result<()> {
        if from >= self.nodes.len() || to >= self.nodes.len() {
            return invalid("edge endpoint out of range");
        }
        if self.nodes[to].frame <= self.nodes[from].frame {
            return Err(Error::Contract("edges must point forward in time".into()));
        }
        self.edges.push(TrackEdge { from, to, interpolated });
        Ok(())
    }

    pub fn nodes(&self) -> &[TrackNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[TrackEdge] {
        &self.edges
    }

    pub fn node_index(&self, frame: u32, id: u64) -> Option<usize> {
        self.index.get(&(frame, id)).copied()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        self.edges.iter().for_each(|e| d[e.from] += 1);
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        self.edges.iter().for_each(|e| d[e.to] += 1);
        d
    }

    pub fn frame_range(&self) -> Option<(u32, u32)> {
        let lo = self.nodes.iter().map(|n| n.frame).min()?;
        let hi = self.nodes.iter().map(|n| n.frame).max()?;
        Some((lo, hi))
    }

    /// Edge list with header `frame_from,id_from,frame_to,id_to,interpolated_flag`,
    /// sorted by source then target.
    pub fn write_edges_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut rows: Vec<(u32, u64, u32, u64, u8)> = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (&self.nodes[e.from], &self.nodes[e.to]);
                (a.frame, a.id, b.frame, b.id, u8::from(e.interpolated))
            })
            .collect();
        rows.sort_unstable();
        writeln!(w, "frame_from,id_from,frame_to,id_to,interpolated_flag")?;
        for r in rows {
            writeln!(w, "{},{},{},{},{}", r.0, r.1, r.2, r.3, r.4)?;
        }
        Ok(())
    }

    pub fn write_edges(&self, path: &Path) -> Result<()> {
        self.write_edges_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Node list with header `frame,id,x,y,z,interpolated_flag`.
    pub fn write_nodes_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&k| (self.nodes[k].frame, self.nodes[k].id));
        writeln!(w, "frame,id,x,y,z,interpolated_flag")?;
        for k in order {
            let n = &self.nodes[k];
            writeln!(w, "{},{},{},{},{},{}", n.frame, n.id, n.pos[0], n.pos[1], n.pos[2], u8::from(n.interpolated))?;
        }
        Ok(())
    }
}

/// Links every point of frame `t` to its nearest point of frame `t + 1`
/// within `max_dist` (ties to the lower target id). Several points may share
/// a target.
pub fn nn_track(frames: &[Vec<TrackPoint>], max_dist: f64) -> Result<TrackGraph> {
    if !(max_dist.is_finite() && max_dist >= 0.0) {
        return invalid(format!("max_dist must be finite and >= 0, got {max_dist}"));
    }
    let mut g = TrackGraph::new();
    let mut idx: Vec<Vec<usize>> = Vec::with_capacity(frames.len());
    for (t, pts) in frames.iter().enumerate() {
        let mut ks = Vec::with_capacity(pts.len());
        for p in pts {
            ks.push(g.add_node(TrackNode { frame: t as u32, id: p.id, pos: p.pos, interpolated: false })?);
        }
        idx.push(ks);
    }
    for t in 0..frames.len().saturating_sub(1) {
        for (a, p) in frames[t].iter().enumerate() {
            let best = frames[t + 1]
                .iter()
                .enumerate()
                .map(|(b, q)| (dist(p.pos, q.pos), q.id, b))
                .filter(|(d, _, _)| *d <= max_dist)
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            if let Some((_, _, b)) = best {
                g.add_edge(idx[t][a], idx[t + 1][b], false)?;
            }
        }
    }
    Ok(g)
}

/// Column names used to read segment and seed tables for tracking.
#[derive(Clone, Debug)]
pub struct FallbackColumns {
    /// Physical centroid columns of the segment table.
    pub centroid: [String; 3],
    /// Voxel position columns of the seed table.
    pub seed_position: [String; 3],
    /// Seed table column holding the id of the segment containing the seed.
    pub seed_segment: String,
    /// FSMD term of the segment table.
    pub term: String,
}

impl Default for FallbackColumns {
    fn default() -> Self {
        Self {
            centroid: ["cx".into(), "cy".into(), "cz".into()],
            seed_position: ["x".into(), "y".into(), "z".into()],
            seed_segment: "segment_id".into(),
            term: "2".into(),
        }
    }
}

/// Tracking nodes for one frame: certain segments (`fsmd >= beta`) keep their
/// centroid, uncertain ones are replaced by the seeds they contain. Uncertain
/// segments that contain no seed keep their centroid.
pub fn fallback_points(
    segments: &FeatureTable,
    seeds: &FeatureTable,
    spacing: [f64; 3],
    beta: f64,
    cols: &FallbackColumns,
) -> Result<Vec<TrackPoint>> {
    let st = propagate(segments, seeds, &cols.seed_segment, &[(cols.term.clone(), f64::NEG_INFINITY, beta)])?;
    let c: Vec<usize> = cols.centroid.iter().map(|n| segments.require_column(n)).collect::<Result<_>>()?;
    let s: Vec<usize> = cols.seed_position.iter().map(|n| st.carried.require_column(n)).collect::<Result<_>>()?;
    let link = st.carried.require_column(&cols.seed_segment)?;
    let fsmd = segments.require_column(&format!("fsmd_{}", cols.term))?;
    let replaced: std::collections::BTreeSet<u64> =
        (0..st.carried.len()).map(|r| st.carried.row(r)[link] as u64).collect();
    let mut out = Vec::new();
    for r in 0..segments.len() {
        let row = segments.row(r);
        let id = segments.ids()[r];
        if row[fsmd] >= beta || !replaced.contains(&id) {
            out.push(TrackPoint { id, pos: [row[c[0]], row[c[1]], row[c[2]]] });
        }
    }
    for r in 0..st.carried.len() {
        let row = st.carried.row(r);
        let pos = [row[s[0]] * spacing[0], row[s[1]] * spacing[1], row[s[2]] * spacing[2]];
        out.push(TrackPoint { id: SEED_NODE_BASE + st.carried.ids()[r], pos });
    }
    Ok(out)
}

/// Bridges single-frame gaps: a track end at `t` and a track start at `t + 2`
/// closer than `2 * max_dist` are joined through an interpolated midpoint node.
/// Pairs are taken greedily by ascending distance.
pub fn repair_gaps(graph: &TrackGraph, max_dist: f64) -> Result<TrackGraph> {
    let mut g = graph.clone();
    let out = g.out_degrees();
    let inn = g.in_degrees();
    let Some((first, last)) = g.frame_range() else { return Ok(g) };
    let ends: Vec<usize> = (0..g.nodes.len()).filter(|&k| out[k] == 0 && g.nodes[k].frame + 2 <= last).collect();
    let starts: Vec<usize> = (0..g.nodes.len()).filter(|&k| inn[k] == 0 && g.nodes[k].frame >= first + 2).collect();
    let mut cands = Vec::new();
    for &e in &ends {
        for &s in &starts {
            if g.nodes[s].frame == g.nodes[e].frame + 2 {
                let d = dist(g.nodes[e].pos, g.nodes[s].pos);
                if d <= 2.0 * max_dist {
                    cands.push((d, e, s));
                }
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = std::collections::BTreeSet::new();
    let mut used_s = std::collections::BTreeSet::new();
    let mut next = INTERPOLATED_NODE_BASE;
    for (_, e, s) in cands {
        if used_e.contains(&e) || used_s.contains(&s) {
            continue;
        }
        used_e.insert(e);
        used_s.insert(s);
        let (a, b) = (g.nodes[e], g.nodes[s]);
        let mid = [(a.pos[0] + b.pos[0]) / 2.0, (a.pos[1] + b.pos[1]) / 2.0, (a.pos[2] + b.pos[2]) / 2.0];
        while g.node_index(a.frame + 1, next).is_some() {
            next += 1;
        }
        let m = g.add_node(TrackNode { frame: a.frame + 1, id: next, pos: mid, interpolated: true })?;
        next += 1;
        g.add_edge(e, m, true)?;
        g.add_edge(m, s, true)?;
    }
    Ok(g)
}

/// Links track ends to later track starts greedily by ascending distance,
/// subject to `frame gap <= max_gap` and `distance / gap <= max_speed`.
/// An end gains at most `max_branch` successors, a start at most one predecessor.
pub fn link_tracklets(graph: &TrackGraph, max_gap: u32, max_speed: f64, max_branch: usize) -> Result<TrackGraph> {
    let mut g = graph.clone();
    let out = g.out_degrees();
    let inn = g.in_degrees();
    let Some((first, last)) = g.frame_range() else { return Ok(g) };
    let ends: Vec<usize> = (0..g.nodes.len()).filter(|&k| out[k] == 0 && g.nodes[k].frame < last).collect();
    let starts: Vec<usize> = (0..g.nodes.len()).filter(|&k| inn[k] == 0 && g.nodes[k].frame > first).collect();
    let mut cands = Vec::new();
    for &e in &ends {
        for &s in &starts {
            let (fe, fs) = (g.nodes[e].frame, g.nodes[s].frame);
            if fs <= fe || fs - fe > max_gap {
                continue;
            }
            let d = dist(g.nodes[e].pos, g.nodes[s].pos);
            if d / f64::from(fs - fe) <= max_speed {
                cands.push((d, e, s));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut succ: BTreeMap<usize, usize> = BTreeMap::new();
    let mut has_pred = std::collections::BTreeSet::new();
    for (_, e, s) in cands {
        let n = succ.entry(e).or_default();
        if *n >= max_branch || has_pred.contains(&s) {
            continue;
        }
        *n += 1;
        has_pred.insert(s);
        g.add_edge(e, s, false)?;
    }
    Ok(g)
}
