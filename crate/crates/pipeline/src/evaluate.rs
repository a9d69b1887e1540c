//! Scoring pipeline results against a generated benchmark.
//!
//! Result files are discovered by name: `t<4 digits>` gives the frame and
//! `_v<digit>` the view (0 when absent). Label images end in `_labels.tif`,
//! seed tables are CSV files with `x`, `y`, `z` and `radius` columns. When
//! several candidates exist for one frame and view, the last one in name
//! order wins, which is the latest item for names built from item ids.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;

use voxseg_core::io::read_labels;
use voxseg_core::metrics::{
    match_by_labels, nsd_hausdorff, rand_jaccard, seed_eval, topo_errors, tra, IntersectionHistogram, TraReport,
    TraWeights,
};
use voxseg_core::seeds::seed_positions;
use voxseg_core::track::{nn_track, TrackPoint};
use voxseg_core::{FeatureTable, LabelImage};
use voxseg_sim::{truth_track_graph, Dataset};

use crate::error::{at, io_at, Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeedScores {
    pub count: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SegmentScores {
    pub count: usize,
    pub ri: f64,
    pub ji: f64,
    pub nsd: f64,
    pub hausdorff: f64,
    pub split: usize,
    pub merged: usize,
    pub spurious: usize,
    pub missing: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRow {
    pub frame: u32,
    pub view: u8,
    pub truth_objects: usize,
    pub seeds: Option<SeedScores>,
    pub segments: Option<SegmentScores>,
}

#[derive(Clone, Debug, Default)]
pub struct EvalOptions {
    /// Largest centroid displacement linked between frames.
    pub max_dist: f64,
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub rows: Vec<FrameRow>,
    /// Tracking accuracy over view-0 label images, when more than one frame has one.
    pub tracking: Option<TraReport>,
}

#[derive(Default)]
struct Found {
    labels: Option<PathBuf>,
    seeds: Option<PathBuf>,
}

fn is_seed_table(path: &Path) -> Result<bool> {
    let text = io_at(path, fs::read_to_string(path))?;
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').map(str::trim).collect();
    Ok(["x", "y", "z", "radius"].iter().all(|c| header.contains(c)))
}

fn discover(result_dir: &Path) -> Result<BTreeMap<(u32, u8), Found>> {
    let frame_re = Regex::new(r"t(\d{4})").expect("valid pattern");
    let view_re = Regex::new(r"_v(\d)").expect("valid pattern");
    let mut names: Vec<PathBuf> = io_at(result_dir, fs::read_dir(result_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    let mut out: BTreeMap<(u32, u8), Found> = BTreeMap::new();
    for p in names {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let Some(f) = frame_re.captures(&name) else { continue };
        let frame: u32 = f[1].parse().expect("four digits");
        let view: u8 = view_re.captures(&name).map_or(0, |v| v[1].parse().expect("one digit"));
        let slot = out.entry((frame, view)).or_default();
        if name.ends_with("_labels.tif") {
            slot.labels = Some(p);
        } else if name.ends_with(".csv") && is_seed_table(&p)? {
            slot.seeds = Some(p);
        }
    }
    out.retain(|_, f| f.labels.is_some() || f.seeds.is_some());
    Ok(out)
}

fn flip_labels(l: &LabelImage) -> LabelImage {
    let [nx, ny, nz] = l.dims();
    LabelImage::from_fn([nx, ny, nz], l.spacing(), |x, y, z| l.get(nx - 1 - x, y, nz - 1 - z)).expect("same shape")
}

/// Scores one segmentation against the reference labels.
pub fn segment_scores(truth: &LabelImage, seg: &LabelImage) -> Result<SegmentScores> {
    let h = IntersectionHistogram::from_images(truth, seg)?;
    let rj = rand_jaccard(&h);
    let d = nsd_hausdorff(truth, seg)?;
    let t = topo_errors(&h);
    Ok(SegmentScores {
        count: seg.labels().len(),
        ri: rj.rand_index,
        ji: rj.jaccard_index,
        nsd: d.nsd,
        hausdorff: d.hausdorff,
        split: t.split,
        merged: t.merged,
        spurious: t.spurious,
        missing: t.missing,
        tp: t.tp,
        fp: t.fp,
        fn_: t.fn_,
        precision: t.precision,
        recall: t.recall,
        f_score: t.f_score,
    })
}

/// Scores seed positions (voxel coordinates) against the reference labels.
pub fn seed_scores(truth: &LabelImage, seeds: &[[f64; 3]]) -> SeedScores {
    let e = seed_eval(seeds, truth);
    SeedScores {
        count: seeds.len(),
        tp: e.tp,
        fp: e.fp,
        fn_: e.fn_,
        precision: e.precision,
        recall: e.recall,
        f_score: e.f_score,
    }
}

/// Label centroids in physical units, one tracking point per label.
pub fn label_points(l: &LabelImage) -> Vec<TrackPoint> {
    let g = *l.grid();
    l.regions().into_iter().map(|r| TrackPoint { id: u64::from(r.label), pos: g.to_physical(r.centroid()) }).collect()
}

/// Evaluates every discovered result against the benchmark in `truth_dir`.
pub fn evaluate(truth_dir: &Path, result_dir: &Path, opts: &EvalOptions) -> Result<EvalReport> {
    let ds = Dataset::open(truth_dir)?;
    let found = discover(result_dir)?;
    if found.is_empty() {
        return Err(Error::Input(format!("{}: no result files with a t#### frame tag", result_dir.display())));
    }
    let mut rows = Vec::new();
    let mut tracked: BTreeMap<u32, LabelImage> = BTreeMap::new();
    let mut truth_cache: BTreeMap<u32, LabelImage> = BTreeMap::new();
    for (&(frame, view), f) in &found {
        if let std::collections::btree_map::Entry::Vacant(e) = truth_cache.entry(frame) {
            e.insert(ds.labels(frame)?);
        }
        let truth = &truth_cache[&frame];
        let dims = truth.dims();
        let seeds = match &f.seeds {
            Some(p) => {
                let t = at(p, FeatureTable::read_csv(0, p))?;
                let mut pos = seed_positions(&t)?;
                if view == 1 {
                    for q in &mut pos {
                        q[0] = (dims[0] - 1) as f64 - q[0];
                        q[2] = (dims[2] - 1) as f64 - q[2];
                    }
                }
                Some(seed_scores(truth, &pos))
            }
            None => None,
        };
        let segments = match &f.labels {
            Some(p) => {
                let l = at(p, read_labels(p))?;
                let l = if view == 1 { flip_labels(&l) } else { l };
                let l = l.with_spacing(truth.spacing())?;
                let s = segment_scores(truth, &l)?;
                if view == 0 {
                    tracked.insert(frame, l);
                }
                Some(s)
            }
            None => None,
        };
        rows.push(FrameRow { frame, view, truth_objects: truth.labels().len(), seeds, segments });
    }

    let tracking = if tracked.len() > 1 {
        let frames: Vec<u32> = tracked.keys().copied().collect();
        let contiguous = frames.windows(2).all(|w| w[1] == w[0] + 1) && frames[0] == 0;
        if !contiguous {
            return Err(Error::Input("tracking needs label results for frames 0..n without gaps".into()));
        }
        let spacing = ds.config.sim.spacing;
        let rows_t: Vec<_> = ds.truth()?.into_iter().filter(|r| r.frame <= *frames.last().expect("non-empty")).collect();
        let gt = truth_track_graph(&rows_t, spacing)?;
        let points: Vec<Vec<TrackPoint>> = tracked.values().map(label_points).collect();
        let result = nn_track(&points, opts.max_dist)?;
        let refs: Vec<LabelImage> = frames.iter().map(|f| truth_cache[f].clone()).collect();
        let matching = match_by_labels(&gt, &result, &refs);
        Some(tra(&gt, &result, &matching, TraWeights::default())?)
    } else {
        None
    };
    Ok(EvalReport { rows, tracking })
}

pub const REPORT_COLUMNS: [&str; 25] = [
    "frame",
    "view",
    "truth_objects",
    "seed_count",
    "seed_tp",
    "seed_fp",
    "seed_fn",
    "seed_precision",
    "seed_recall",
    "seed_f",
    "segment_count",
    "ri",
    "ji",
    "nsd",
    "hausdorff",
    "split",
    "merged",
    "spurious",
    "missing",
    "seg_tp",
    "seg_fp",
    "seg_fn",
    "seg_precision",
    "seg_recall",
    "seg_f",
];

impl EvalReport {
    /// One line per frame and view; missing parts are empty fields.
    pub fn to_csv(&self) -> String {
        let mut s = REPORT_COLUMNS.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{},{}", r.frame, r.view, r.truth_objects);
            match &r.seeds {
                Some(e) => {
                    let _ = write!(s, ",{},{},{},{},{},{},{}", e.count, e.tp, e.fp, e.fn_, e.precision, e.recall, e.f_score);
                }
                None => s.push_str(",,,,,,,"),
            }
            match &r.segments {
                Some(e) => {
                    let _ = write!(
                        s,
                        ",{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        e.count,
                        e.ri,
                        e.ji,
                        e.nsd,
                        e.hausdorff,
                        e.split,
                        e.merged,
                        e.spurious,
                        e.missing,
                        e.tp,
                        e.fp,
                        e.fn_,
                        e.precision,
                        e.recall,
                        e.f_score
                    );
                }
                None => s.push_str(",,,,,,,,,,,,,,,"),
            }
            s.push('\n');
        }
        s
    }

    pub fn tracking_csv(&self) -> Option<String> {
        let t = self.tracking.as_ref()?;
        Some(format!(
            "tra,penalty,empty_cost,ns,fn,fp,ed,ea,ec\n{},{},{},{},{},{},{},{},{}\n",
            t.tra, t.penalty, t.empty_cost, t.ns, t.fn_, t.fp, t.ed, t.ea, t.ec
        ))
    }

    /// Writes the frame report and, with tracking, `<stem>_tra.csv` beside it.
    pub fn write(&self, report: &Path) -> Result<Vec<PathBuf>> {
        if let Some(dir) = report.parent().filter(|d| !d.as_os_str().is_empty()) {
            io_at(dir, fs::create_dir_all(dir))?;
        }
        io_at(report, fs::write(report, self.to_csv()))?;
        let mut out = vec![report.to_path_buf()];
        if let Some(t) = self.tracking_csv() {
            let stem = report.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
            let p = report.with_file_name(format!("{stem}_tra.csv"));
            io_at(&p, fs::write(&p, t))?;
            out.push(p);
        }
        Ok(out)
    }

    /// Mean of a per-row quantity over the rows that have it.
    pub fn mean(&self, f: impl Fn(&FrameRow) -> Option<f64>) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter_map(f).collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    }
}
