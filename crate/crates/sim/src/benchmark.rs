//! Benchmark datasets on disk: configuration manifest, per-frame images,
//! ground-truth labels and a truth table covering all frames.
//!
//! Layout inside the output directory:
//!
//! ```text
//! manifest.txt                 key=value parameters, seed and per-image SNR/CNR
//! truth.csv                    frame,id,parent_id,x,y,z,radius,phase
//! labels_t0000.tif             ground truth in the view-0 frame
//! raw_t0000_v0.tif             acquired image; view 1 is stored in its own rotated frame
//! ```
//!
//! Truth positions are voxel coordinates of the view-0 frame; founders have
//! `parent_id` 0.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use voxseg_core::io::{read_labels, read_volume, write_labels, write_volume};
use voxseg_core::kv::KeyValues;
use voxseg_core::metrics::image_quality;
use voxseg_core::track::{TrackGraph, TrackNode};
use voxseg_core::{LabelImage, Volume};

use crate::acquire::{acquire_view, AcquisitionParams, Attenuation, Mode, NoiseKey, Psf};
use crate::error::{at, io_at, Error, Result};
use crate::model::{simulate, SimParams};
use crate::render::render_frame;

pub const MANIFEST: &str = "manifest.txt";
pub const TRUTH_CSV: &str = "truth.csv";

pub fn raw_name(frame: u32, view: u8) -> String {
    format!("raw_t{frame:04}_v{view}.tif")
}

pub fn labels_name(frame: u32) -> String {
    format!("labels_t{frame:04}.tif")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchmarkConfig {
    pub sim: SimParams,
    pub acq: AcquisitionParams,
}

fn axes(kv: &mut KeyValues, prefix: &str, v: [f64; 3]) {
    for (a, s) in ["x", "y", "z"].iter().enumerate() {
        kv.set(format!("{prefix}_{s}"), v[a]);
    }
}

fn read_axes(kv: &KeyValues, prefix: &str, v: &mut [f64; 3]) -> Result<()> {
    for (a, s) in ["x", "y", "z"].iter().enumerate() {
        if let Some(x) = kv.get_f64(&format!("{prefix}_{s}"))? {
            v[a] = x;
        }
    }
    Ok(())
}

fn read_into<T: std::str::FromStr>(kv: &KeyValues, key: &str, slot: &mut T) -> Result<()> {
    if let Some(v) = kv.get(key) {
        *slot = v.trim().parse().map_err(|_| Error::InvalidParams(format!("{key}: cannot parse {v:?}")))?;
    }
    Ok(())
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        _ => Err(Error::InvalidParams(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl BenchmarkConfig {
    /// 128 x 128 x 32 volume with 50 nuclei and a PSF of one voxel per axis
    /// (2.5 physical units along z at the default spacing).
    pub fn desk(seed: u64, frames: u32, mode: Mode, sigma_agn: f64) -> Self {
        let sim = SimParams { seed, frames, ..SimParams::default() };
        let acq = AcquisitionParams {
            psf: Some(Psf::Gaussian { sigma_vox: [1.0; 3] }),
            sigma_agn,
            mode,
            ..AcquisitionParams::default()
        };
        Self { sim, acq }
    }

    pub fn to_kv(&self) -> KeyValues {
        let s = &self.sim;
        let a = &self.acq;
        let mut kv = KeyValues::new();
        kv.set("seed", s.seed);
        kv.set("frames", s.frames);
        kv.set("mode", a.mode);
        kv.set("n_initial", s.n_initial);
        kv.set("n_max", s.n_max);
        kv.set("w_adh", s.w_adh);
        kv.set("w_rep", s.w_rep);
        kv.set("w_bdr", s.w_bdr);
        axes(&mut kv, "shell_center", s.shell.center);
        kv.set("shell_r_inner", s.shell.r_inner);
        kv.set("shell_r_outer", s.shell.r_outer);
        kv.set("shell_steepness", s.shell.steepness);
        axes(&mut kv, "dims", s.dims.map(|d| d as f64));
        axes(&mut kv, "spacing", s.spacing);
        kv.set("radius_min", s.radius_range.0);
        kv.set("radius_max", s.radius_range.1);
        kv.set("cycle_min", s.cycle_range.0);
        kv.set("cycle_max", s.cycle_range.1);
        kv.set("min_gap", s.min_gap);
        kv.set("relax_steps", s.relax_steps);
        kv.set("attenuation", a.attenuation.is_some());
        let att = a.attenuation.unwrap_or(Attenuation { axis: 2, toward_high: true });
        kv.set("attenuation_axis", att.axis);
        kv.set("attenuation_toward_high", att.toward_high);
        match &a.psf {
            None => kv.set("psf", "none"),
            Some(Psf::Gaussian { sigma_vox }) => {
                kv.set("psf", "gaussian");
                axes(&mut kv, "psf_sigma", *sigma_vox);
            }
            Some(Psf::Kernel(_)) => kv.set("psf", "kernel"),
        }
        kv.set("dark_offset", a.dark_offset);
        kv.set("photons", a.photons.unwrap_or(0.0));
        kv.set("sigma_agn", a.sigma_agn);
        kv
    }

    /// Starts from the defaults and overrides every key present. Unknown keys
    /// (such as the per-image statistics of a written manifest) are ignored.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let mut c = Self::default();
        let s = &mut c.sim;
        read_into(kv, "seed", &mut s.seed)?;
        read_into(kv, "frames", &mut s.frames)?;
        read_into(kv, "n_initial", &mut s.n_initial)?;
        read_into(kv, "n_max", &mut s.n_max)?;
        read_into(kv, "w_adh", &mut s.w_adh)?;
        read_into(kv, "w_rep", &mut s.w_rep)?;
        read_into(kv, "w_bdr", &mut s.w_bdr)?;
        read_axes(kv, "shell_center", &mut s.shell.center)?;
        read_into(kv, "shell_r_inner", &mut s.shell.r_inner)?;
        read_into(kv, "shell_r_outer", &mut s.shell.r_outer)?;
        read_into(kv, "shell_steepness", &mut s.shell.steepness)?;
        let mut dims = s.dims.map(|d| d as f64);
        read_axes(kv, "dims", &mut dims)?;
        if dims.iter().any(|d| !(*d >= 1.0 && d.fract() == 0.0)) {
            return Err(Error::InvalidParams(format!("dims must be positive integers, got {dims:?}")));
        }
        s.dims = dims.map(|d| d as usize);
        read_axes(kv, "spacing", &mut s.spacing)?;
        read_into(kv, "radius_min", &mut s.radius_range.0)?;
        read_into(kv, "radius_max", &mut s.radius_range.1)?;
        read_into(kv, "cycle_min", &mut s.cycle_range.0)?;
        read_into(kv, "cycle_max", &mut s.cycle_range.1)?;
        read_into(kv, "min_gap", &mut s.min_gap)?;
        read_into(kv, "relax_steps", &mut s.relax_steps)?;

        let a = &mut c.acq;
        if let Some(m) = kv.get("mode") {
            a.mode = m.parse()?;
        }
        let mut att = a.attenuation.unwrap_or(Attenuation { axis: 2, toward_high: true });
        read_into(kv, "attenuation_axis", &mut att.axis)?;
        if let Some(v) = kv.get("attenuation_toward_high") {
            att.toward_high = parse_bool("attenuation_toward_high", v)?;
        }
        let on = match kv.get("attenuation") {
            Some(v) => parse_bool("attenuation", v)?,
            None => a.attenuation.is_some(),
        };
        a.attenuation = on.then_some(att);
        match kv.get("psf").map(|v| v.trim().to_ascii_lowercase()) {
            Some(p) if p == "none" => a.psf = None,
            Some(p) if p == "gaussian" => {
                let mut sigma = match &a.psf {
                    Some(Psf::Gaussian { sigma_vox }) => *sigma_vox,
                    _ => [1.0, 1.0, 3.0],
                };
                read_axes(kv, "psf_sigma", &mut sigma)?;
                a.psf = Some(Psf::Gaussian { sigma_vox: sigma });
            }
            Some(p) => return Err(Error::InvalidParams(format!("psf {p:?} cannot be configured from a manifest"))),
            None => {
                if let Some(Psf::Gaussian { mut sigma_vox }) = a.psf {
                    read_axes(kv, "psf_sigma", &mut sigma_vox)?;
                    a.psf = Some(Psf::Gaussian { sigma_vox });
                }
            }
        }
        read_into(kv, "dark_offset", &mut a.dark_offset)?;
        if let Some(k) = kv.get_f64("photons")? {
            a.photons = (k > 0.0).then_some(k);
        }
        read_into(kv, "sigma_agn", &mut a.sigma_agn)?;
        c.sim.validate()?;
        c.acq.validate()?;
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_kv(&at(path, KeyValues::read(path))?)
    }
}

/// One row of the truth table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthRow {
    pub frame: u32,
    pub id: u64,
    pub parent_id: Option<u64>,
    /// Voxel coordinates in the view-0 frame.
    pub pos: [f64; 3],
    pub radius: f64,
    pub phase: f64,
}

pub fn write_truth(path: &Path, rows: &[TruthRow]) -> Result<()> {
    let mut s = String::from("frame,id,parent_id,x,y,z,radius,phase\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.frame,
            r.id,
            r.parent_id.unwrap_or(0),
            r.pos[0],
            r.pos[1],
            r.pos[2],
            r.radius,
            r.phase
        );
    }
    io_at(path, fs::write(path, s))
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRow>> {
    let text = io_at(path, fs::read_to_string(path))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::File {
            path: path.to_path_buf(),
            source: voxseg_core::Error::Parse { line: n + 1, msg: format!("malformed truth row {line:?}") },
        };
        if f.len() != 8 {
            return Err(bad());
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
        let int = |k: usize| f[k].parse::<u64>().map_err(|_| bad());
        let parent = int(2)?;
        out.push(TruthRow {
            frame: u32::try_from(int(0)?).map_err(|_| bad())?,
            id: int(1)?,
            parent_id: (parent != 0).then_some(parent),
            pos: [num(3)?, num(4)?, num(5)?],
            radius: num(6)?,
            phase: num(7)?,
        });
    }
    Ok(out)
}

/// Ground-truth lineage: one node per truth row (physical position), an edge
/// between consecutive appearances of an id and from a parent's last frame
/// to each child's first.
pub fn truth_track_graph(rows: &[TruthRow], spacing: [f64; 3]) -> voxseg_core::Result<TrackGraph> {
    let mut g = TrackGraph::new();
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| (r.frame, r.id));
    for r in &sorted {
        let pos = [r.pos[0] * spacing[0], r.pos[1] * spacing[1], r.pos[2] * spacing[2]];
        g.add_node(TrackNode { frame: r.frame, id: r.id, pos, interpolated: false })?;
    }
    for r in &sorted {
        let to = g.node_index(r.frame, r.id).expect("node added above");
        if r.frame == 0 {
            continue;
        }
        let prev = g.node_index(r.frame - 1, r.id).or_else(|| r.parent_id.and_then(|p| g.node_index(r.frame - 1, p)));
        if let Some(from) = prev {
            g.add_edge(from, to, false)?;
        }
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameFiles {
    pub frame: u32,
    pub labels: PathBuf,
    pub views: Vec<(u8, PathBuf)>,
}

/// File listing of a written benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub dir: PathBuf,
    pub config: BenchmarkConfig,
    pub frames: Vec<FrameFiles>,
}

impl Dataset {
    /// Rebuilds the listing from a directory's manifest.
    pub fn open(dir: &Path) -> Result<Self> {
        let config = BenchmarkConfig::read(&dir.join(MANIFEST))?;
        let frames = (0..config.sim.frames.max(1)).map(|f| frame_files(dir, config.acq.mode, f)).collect();
        Ok(Self { dir: dir.to_path_buf(), config, frames })
    }

    pub fn manifest(&self) -> PathBuf {
        self.dir.join(MANIFEST)
    }

    pub fn truth_csv(&self) -> PathBuf {
        self.dir.join(TRUTH_CSV)
    }

    pub fn truth(&self) -> Result<Vec<TruthRow>> {
        read_truth(&self.truth_csv())
    }

    pub fn labels(&self, frame: u32) -> Result<LabelImage> {
        let p = &self.frames[frame as usize].labels;
        at(p, read_labels(p))
    }

    pub fn image(&self, frame: u32, view: u8) -> Result<Volume> {
        let f = &self.frames[frame as usize];
        let (_, p) = f.views.iter().find(|(v, _)| *v == view).ok_or_else(|| {
            Error::InvalidParams(format!("frame {frame} has no view {view}"))
        })?;
        at(p, read_volume(p))
    }
}

fn frame_files(dir: &Path, mode: Mode, frame: u32) -> FrameFiles {
    FrameFiles {
        frame,
        labels: dir.join(labels_name(frame)),
        views: mode.views(frame).into_iter().map(|v| (v, dir.join(raw_name(frame, v)))).collect(),
    }
}

fn flip_labels_xz(l: &LabelImage) -> LabelImage {
    let [nx, ny, nz] = l.dims();
    LabelImage::from_fn([nx, ny, nz], l.spacing(), |x, y, z| l.get(nx - 1 - x, y, nz - 1 - z))
        .expect("same shape as the source")
}

/// Simulates, renders and acquires every frame and writes the dataset.
pub fn generate_benchmark(cfg: &BenchmarkConfig, out_dir: &Path) -> Result<Dataset> {
    cfg.sim.validate()?;
    cfg.acq.validate()?;
    io_at(out_dir, fs::create_dir_all(out_dir))?;
    let s = &cfg.sim;
    let states = simulate(s)?;
    let mut manifest = cfg.to_kv();
    let mut truth_rows = Vec::new();
    let mut frames = Vec::with_capacity(states.len());
    for (f, state) in states.iter().enumerate() {
        let frame = f as u32;
        let (raw, labels, truth) = render_frame(state, s.dims, s.spacing)?;
        for r in 0..truth.len() {
            let row = truth.row(r);
            let parent = row[0] as u64;
            truth_rows.push(TruthRow {
                frame,
                id: truth.ids()[r],
                parent_id: (parent != 0).then_some(parent),
                pos: [row[1], row[2], row[3]],
                radius: row[4],
                phase: row[5],
            });
        }
        let files = frame_files(out_dir, cfg.acq.mode, frame);
        at(&files.labels, write_labels(&files.labels, &labels))?;
        for (view, path) in &files.views {
            let img = acquire_view(&raw, &cfg.acq, NoiseKey { seed: s.seed, frame, view: *view })?;
            at(path, write_volume(path, &img))?;
            let fg = if *view == 0 { labels.clone() } else { flip_labels_xz(&labels) };
            if let Ok(q) = image_quality(&img, &fg) {
                manifest.set(format!("snr_t{frame:04}_v{view}"), q.snr);
                manifest.set(format!("cnr_t{frame:04}_v{view}"), q.cnr);
            }
        }
        frames.push(files);
    }
    let truth_path = out_dir.join(TRUTH_CSV);
    write_truth(&truth_path, &truth_rows)?;
    let manifest_path = out_dir.join(MANIFEST);
    at(&manifest_path, manifest.write(&manifest_path))?;
    Ok(Dataset { dir: out_dir.to_path_buf(), config: cfg.clone(), frames })
}
