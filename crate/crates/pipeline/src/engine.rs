//! Pipeline execution: items run in dependency order and hand images, label
//! images and feature tables to each other.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use voxseg_core::filters::{gaussian_smooth, median_filter};
use voxseg_core::fusion::{flip_xz_transform, fuse_point_sets, fuse_segment_labels, intensity_fuse, RigidTransform};
use voxseg_core::fuzzy::{alpha_filter, augment_table};
use voxseg_core::io::{read_volume, write_labels, write_volume};
use voxseg_core::kv::KeyValues;
use voxseg_core::seeds::{default_seed_spec, detect_edm_seeds, detect_log_seeds, fuse_seeds, EdmSeedParams, LogSeedParams};
use voxseg_core::segment::{
    default_segment_spec, otsu_segment_baseline, otsu_watershed_baseline, region_features, split_oversized,
};
use voxseg_core::twang::{twang_segment, TwangParams};
use voxseg_core::{Combine, FeatureTable, FuzzySpec, Grid, LabelImage, Trapezoid, Volume};

use crate::config::RunConfig;
use crate::error::{at, io_at, Error, Result};
use crate::registry::{lookup, Kind};
use crate::xml::{parse_pipeline, Item, PipelineDoc, CMD};

#[derive(Clone, Debug)]
pub enum Value {
    Image(Volume),
    Labels(LabelImage),
    /// A table together with the grid of the image it was measured on.
    Table { table: FeatureTable, grid: Grid },
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Image(_) => Kind::Image,
            Value::Labels(_) => Kind::Labels,
            Value::Table { .. } => Kind::Table,
        }
    }

    pub fn image(&self) -> Option<&Volume> {
        match self {
            Value::Image(v) => Some(v),
            _ => None,
        }
    }

    pub fn labels(&self) -> Option<&LabelImage> {
        match self {
            Value::Labels(v) => Some(v),
            _ => None,
        }
    }

    pub fn table(&self) -> Option<&FeatureTable> {
        match self {
            Value::Table { table, .. } => Some(table),
            _ => None,
        }
    }
}

/// Typed access to an item's key/value arguments.
pub struct Args<'a> {
    item: &'a Item,
}

impl<'a> Args<'a> {
    pub fn new(item: &'a Item) -> Self {
        Self { item }
    }

    fn bad<T>(&self, key: &str, v: &str, what: &str) -> Result<T> {
        Err(Error::Input(format!("parameter {key}={v:?} is not {what}")))
    }

    pub fn str(&self, key: &str) -> Option<&'a str> {
        self.item.args.get(key).map(|s| s.trim())
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v.parse().or_else(|_| self.bad(key, v, "a number")),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v.parse().or_else(|_| self.bad(key, v, "a count")),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.str(key).map(str::to_ascii_lowercase).as_deref() {
            None => Ok(default),
            Some("1" | "true" | "on" | "yes") => Ok(true),
            Some("0" | "false" | "off" | "no") => Ok(false),
            Some(v) => self.bad(key, v, "a boolean"),
        }
    }

    /// Fuzzy term from `Feature:<column>="a,b,c,d"` entries plus `Term` and
    /// `Combine`; `fallback` when no feature is given.
    pub fn fuzzy_spec(&self, fallback: FuzzySpec) -> Result<FuzzySpec> {
        let mut features = Vec::new();
        for (k, v) in &self.item.args {
            let Some(col) = k.strip_prefix("Feature:") else { continue };
            let nums: Vec<f64> = v
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .or_else(|_| self.bad(k, v, "four comma separated numbers"))?;
            let [a, b, c, d] = nums[..] else { return self.bad(k, v, "four comma separated numbers") };
            features.push((col.to_string(), Trapezoid::new(a, b, c, d)?));
        }
        let mut spec = if features.is_empty() { fallback } else { FuzzySpec::new(fallback.name, fallback.combine) };
        for (col, t) in features {
            spec = spec.with(col, t);
        }
        if let Some(t) = self.str("Term") {
            spec.name = t.to_string();
        }
        if let Some(c) = self.str("Combine") {
            spec.combine = c.parse::<Combine>()?;
        }
        Ok(spec)
    }

    /// FSMD term to act on: `Term`, else the single `fsmd_` column of `t`.
    fn term(&self, t: &FeatureTable) -> Result<String> {
        if let Some(term) = self.str("Term") {
            return Ok(term.to_string());
        }
        let terms: Vec<&str> = t.columns().iter().filter_map(|c| c.strip_prefix("fsmd_")).collect();
        match terms[..] {
            [one] => Ok(one.to_string()),
            _ => Err(Error::Input(format!("cannot pick a fuzzy term among {terms:?}; set Term"))),
        }
    }

    fn transform(&self, grid_b: &Grid, base: &Path) -> Result<RigidTransform> {
        match self.str("Transform").unwrap_or("flip_xz") {
            "flip_xz" => Ok(flip_xz_transform(grid_b.dims, grid_b.spacing)),
            "identity" => Ok(RigidTransform::identity()),
            path => {
                let p = base.join(path);
                at(&p, RigidTransform::read(&p))
            }
        }
    }
}

fn table(t: FeatureTable, grid: Grid) -> Value {
    Value::Table { table: t, grid }
}

fn grid_of(v: &Value) -> Grid {
    match v {
        Value::Image(i) => *i.grid(),
        Value::Labels(l) => *l.grid(),
        Value::Table { grid, .. } => *grid,
    }
}

fn want<'v, T>(v: &'v Value, get: impl Fn(&'v Value) -> Option<&'v T>, slot: usize) -> Result<&'v T> {
    get(v).ok_or_else(|| Error::Input(format!("input {} has the wrong kind {:?}", slot + 1, v.kind())))
}

/// Zeroes every label that has no row in `t`.
fn keep_labels(labels: &LabelImage, t: &FeatureTable) -> Result<LabelImage> {
    let keep: std::collections::BTreeSet<u32> = t.ids().iter().map(|&i| i as u32).collect();
    let data = labels.data().iter().map(|&l| if keep.contains(&l) { l } else { 0 }).collect();
    Ok(LabelImage::from_grid(*labels.grid(), data)?)
}

/// Runs one operator. `operator` is stamped on output tables.
pub fn run_operator(item: &Item, operator: u32, inputs: &[&Value], base: &Path) -> Result<Vec<Value>> {
    let a = Args::new(item);
    let img = |k: usize| want(inputs[k], Value::image, k);
    let lab = |k: usize| want(inputs[k], Value::labels, k);
    let tab = |k: usize| want(inputs[k], Value::table, k);
    let stamp = |mut t: FeatureTable| {
        t.set_operator(operator);
        t
    };
    Ok(match item.name.as_str() {
        "ImageReader" => {
            let i = img(0)?;
            let s = i.spacing();
            let spacing = [a.f64("SpacingX", s[0])?, a.f64("SpacingY", s[1])?, a.f64("SpacingZ", s[2])?];
            vec![Value::Image(i.clone().with_spacing(spacing)?)]
        }
        "MedianImageFilter" => {
            let r = a.usize("Radius", 1)?;
            let rz = if a.bool("FilterMask3D", true)? { r } else { 0 };
            vec![Value::Image(median_filter(img(0)?, [r, r, rz])?)]
        }
        "DiscreteGaussianImageFilter" => {
            let sigma = match a.str("Variance") {
                Some(_) => a.f64("Variance", 1.0)?.sqrt(),
                None => a.f64("Sigma", 1.0)?,
            };
            vec![Value::Image(gaussian_smooth(img(0)?, sigma)?)]
        }
        "LoGSeedDetection" => {
            let w = a.usize("WindowRadius", 2)?;
            let p = LogSeedParams {
                sigma_min: a.f64("SigmaMin", 2.0)?,
                sigma_max: a.f64("SigmaMax", 4.0)?,
                sigma_step: a.f64("SigmaStep", 0.5)?,
                strict: a.bool("Strict", false)?,
                t_wmi: a.f64("IntensityThreshold", 0.1)?,
                window_radius: [w, w, w],
                operator,
            };
            let i = img(0)?;
            vec![table(detect_log_seeds(i, &p)?, *i.grid())]
        }
        "EdmSeedDetection" => {
            let p = EdmSeedParams {
                log_sigma: a.f64("LogSigma", 0.0)?,
                threshold: a.f64("Threshold", 0.5)?,
                h: a.f64("H", 1.0)?,
                min_volume: a.usize("MinVolume", 1)?,
                operator,
            };
            let i = img(0)?;
            let (l, t) = detect_edm_seeds(i, &p)?;
            vec![Value::Labels(l), table(t, *i.grid())]
        }
        "SeedFusion" => {
            let g = grid_of(inputs[0]);
            vec![table(stamp(fuse_seeds(tab(0)?, a.f64("Cutoff", 4.0)?, g.spacing)?), g)]
        }
        "FuzzyScoring" => {
            let t = tab(0)?;
            let fallback = if t.column_index("wmi").is_some() { default_seed_spec() } else { default_segment_spec() };
            let spec = a.fuzzy_spec(fallback)?;
            let mut t = t.clone();
            augment_table(&mut t, std::slice::from_ref(&spec))?;
            vec![table(t, grid_of(inputs[0]))]
        }
        "FuzzyFilter" => {
            let t = tab(0)?;
            let term = a.term(t)?;
            vec![table(alpha_filter(t, &[(term, a.f64("Alpha", 0.1)?)])?, grid_of(inputs[0]))]
        }
        "FuzzyLabelFilter" => {
            let t = tab(1)?;
            let term = a.term(t)?;
            let kept = alpha_filter(t, &[(term, a.f64("Alpha", 0.1)?)])?;
            let l = lab(0)?;
            vec![Value::Labels(keep_labels(l, &kept)?), table(kept, *l.grid())]
        }
        "TwangSegmentation" => {
            let p = TwangParams {
                sigma_grad: a.f64("SigmaGrad", 3.0)?,
                sigma_kernel: a.f64("SigmaKernel", 3.0)?,
                omega: a.f64("Omega", 1.0)?,
                operator,
            };
            let i = img(0)?;
            let out = twang_segment(i, tab(1)?, &p, true)?;
            let labels = out.labels.expect("labels were requested");
            vec![Value::Labels(labels), table(out.segments, *i.grid())]
        }
        "OtsuSegmentation" => {
            let i = img(0)?;
            let l = otsu_segment_baseline(i, a.f64("Sigma", 1.0)?)?;
            let t = region_features(&l, i, operator)?;
            vec![Value::Labels(l), table(t, *i.grid())]
        }
        "OtsuWatershedSegmentation" => {
            let i = img(0)?;
            let l = otsu_watershed_baseline(i, a.f64("Sigma", 1.0)?, tab(1)?)?;
            let t = region_features(&l, i, operator)?;
            vec![Value::Labels(l), table(t, *i.grid())]
        }
        "WatershedSplitting" => {
            let i = img(0)?;
            let spec = a.fuzzy_spec(default_segment_spec())?;
            let out = split_oversized(lab(1)?, i, tab(2)?, &spec, a.f64("Alpha", 0.1)?, a.f64("Beta", 0.5)?)?;
            vec![Value::Labels(out.labels), table(stamp(out.segments), *i.grid())]
        }
        "SegmentFusion" => {
            let (la, lb) = (lab(0)?, lab(2)?);
            let tf = a.transform(lb.grid(), base)?;
            let column = format!("fsmd_{}", a.str("Term").unwrap_or("2"));
            let (l, t) = fuse_segment_labels(la, tab(1)?, lb, tab(3)?, &tf, &column)?;
            vec![Value::Labels(l), table(stamp(t), *la.grid())]
        }
        "SeedPointFusion" => {
            let (ga, gb) = (grid_of(inputs[0]), grid_of(inputs[1]));
            let tf = a.transform(&gb, base)?;
            let column = format!("fsmd_{}", a.str("Term").unwrap_or("1"));
            let t = fuse_point_sets(tab(0)?, ga.spacing, tab(1)?, gb.spacing, &tf, &column)?;
            vec![table(stamp(t), ga)]
        }
        "IntensityFusion" => {
            let (ia, ib) = (img(0)?, img(1)?);
            let tf = a.transform(ib.grid(), base)?;
            vec![Value::Image(intensity_fuse(ia, ib, &tf)?)]
        }
        other => return Err(Error::Input(format!("operator {other} is not executable"))),
    })
}

/// Outcome of an execution: the order items ran in and every item's outputs.
#[derive(Clone, Debug, Default)]
pub struct Execution {
    pub trace: Vec<String>,
    pub outputs: BTreeMap<String, Vec<Value>>,
}

impl Execution {
    /// Output `k` (counting from 1) of an item.
    pub fn output(&self, item: &str, k: usize) -> Option<&Value> {
        self.outputs.get(item)?.get(k.checked_sub(1)?)
    }
}

/// Runs every item in dependency order. `load` supplies run configuration
/// inputs by index; `done` sees each item's outputs as soon as it finished.
pub fn execute_with(
    doc: &PipelineDoc,
    base: &Path,
    load: &mut dyn FnMut(usize) -> Result<Volume>,
    done: &mut dyn FnMut(&Item, &[Value]) -> Result<()>,
) -> Result<Execution> {
    let order = doc.execution_order()?;
    let mut exec = Execution::default();
    let mut cmd: BTreeMap<usize, Value> = BTreeMap::new();
    for k in order {
        let item = &doc.items[k];
        let id = item.item_id.as_str();
        for r in item.inputs.iter().filter(|r| r.item_id_ref == CMD) {
            if let std::collections::btree_map::Entry::Vacant(e) = cmd.entry(r.number_of_output) {
                let v = load(r.number_of_output).map_err(|e| e.in_item(id))?;
                e.insert(Value::Image(v));
            }
        }
        let inputs: Vec<&Value> = item
            .inputs
            .iter()
            .map(|r| if r.item_id_ref == CMD { &cmd[&r.number_of_output] } else { exec.output(&r.item_id_ref, r.number_of_output).expect("ran before") })
            .collect();
        let out = run_operator(item, k as u32 + 1, &inputs, base).map_err(|e| e.in_item(id))?;
        debug_assert!(lookup(&item.name).is_some_and(|op| op.outputs.len() == out.len()));
        done(item, &out).map_err(|e| e.in_item(id))?;
        exec.trace.push(item.item_id.clone());
        exec.outputs.insert(item.item_id.clone(), out);
    }
    Ok(exec)
}

/// Runs a document on in-memory images keyed by input index.
pub fn execute(doc: &PipelineDoc, inputs: &BTreeMap<usize, Volume>) -> Result<Execution> {
    execute_with(
        doc,
        Path::new("."),
        &mut |i| inputs.get(&i).cloned().ok_or_else(|| Error::Input(format!("no input with index {i}"))),
        &mut |_, _| Ok(()),
    )
}

/// Files and status of a run on disk.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub execution: Execution,
    pub written: Vec<PathBuf>,
    pub manifest: PathBuf,
}

fn image_name(cfg: &RunConfig) -> String {
    let first = cfg.inputs.iter().min_by_key(|i| i.index).expect("config has inputs");
    first.path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

fn output_stem(image: &str, item: &Item, tokens: &[String]) -> String {
    let parts: Vec<&str> = tokens
        .iter()
        .map(|t| match t.as_str() {
            "imagename" => image,
            "filterid" => item.item_id.as_str(),
            _ => item.name.as_str(),
        })
        .collect();
    parts.join("_")
}

fn write_value(path_stem: &Path, k: usize, v: &Value) -> Result<PathBuf> {
    let stem = path_stem.to_string_lossy();
    match v {
        Value::Image(img) => {
            let p = PathBuf::from(format!("{stem}_out{k}.tif"));
            let clamped = img.map(|x| x.clamp(0.0, 1.0));
            at(&p, write_volume(&p, &clamped))?;
            Ok(p)
        }
        Value::Labels(l) => {
            let p = PathBuf::from(format!("{stem}_out{k}_labels.tif"));
            at(&p, write_labels(&p, l))?;
            Ok(p)
        }
        Value::Table { table, .. } => {
            let p = PathBuf::from(format!("{stem}_out{k}.csv"));
            at(&p, table.write_csv(&p))?;
            Ok(p)
        }
    }
}

/// Reads the document named by the configuration, runs it on the configured
/// inputs and writes the outputs of items with `WriteResult=1` plus a run
/// manifest. A failing run still writes the manifest, marked partial.
pub fn execute_pipeline(doc: &PipelineDoc, cfg: &RunConfig) -> Result<RunReport> {
    io_at(&cfg.output_dir, fs::create_dir_all(&cfg.output_dir))?;
    let image = image_name(cfg);
    let base = cfg.xml_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut written = Vec::new();
    let mut completed: Vec<String> = Vec::new();
    let result = execute_with(
        doc,
        &base,
        &mut |i| {
            let spec = cfg.input(i).ok_or_else(|| Error::Input(format!("run config has no input with index {i}")))?;
            if !spec.path.exists() {
                return Err(Error::Io {
                    path: spec.path.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "input image not found"),
                });
            }
            at(&spec.path, read_volume::<f64>(&spec.path))
        },
        &mut |item, out| {
            if !Args::new(item).bool("WriteResult", false)? {
                completed.push(item.item_id.clone());
                return Ok(());
            }
            let mut dir = cfg.output_dir.clone();
            if !cfg.subfolder.is_empty() {
                dir.push(output_stem(&image, item, &cfg.subfolder));
                io_at(&dir, fs::create_dir_all(&dir))?;
            }
            let stem = dir.join(output_stem(&image, item, &cfg.output_format));
            for (k, v) in out.iter().enumerate() {
                written.push(write_value(&stem, k + 1, v)?);
            }
            completed.push(item.item_id.clone());
            Ok(())
        },
    );

    let mut kv = KeyValues::new();
    kv.set("xml", cfg.xml_path.display());
    kv.set("seed", cfg.seed);
    for i in &cfg.inputs {
        kv.set(format!("input_{}", i.index), i.path.display());
    }
    let manifest = cfg.output_dir.join(format!("{image}_run.txt"));
    kv.set("trace", completed.join(","));
    let names: Vec<String> =
        written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    kv.set("outputs", names.join(","));
    match result {
        Ok(execution) => {
            kv.set("status", "complete");
            at(&manifest, kv.write(&manifest))?;
            Ok(RunReport { execution, written, manifest })
        }
        Err(e) => {
            kv.set("status", "partial");
            kv.set("failed_item", e.item_id().unwrap_or("-"));
            kv.set("error", e.to_string().replace('\n', " "));
            let _ = kv.write(&manifest);
            Err(e)
        }
    }
}

/// The `run` command: configuration file to outputs on disk.
pub fn run_config_file(path: &Path) -> Result<RunReport> {
    let cfg = RunConfig::read(path)?;
    for w in &cfg.warnings {
        eprintln!("WARN {w}");
    }
    let text = io_at(&cfg.xml_path, fs::read_to_string(&cfg.xml_path))?;
    let doc = parse_pipeline(&text)?;
    execute_pipeline(&doc, &cfg)
}
