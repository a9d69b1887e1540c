//! Library entry points behind the command line subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use voxseg_sim::{generate_benchmark, BenchmarkConfig, Dataset};

use crate::config::RunConfig;
use crate::engine::{execute_pipeline, Execution, Value};
use crate::error::{io_at, Error, Result};
use crate::evaluate::{evaluate, EvalOptions, EvalReport};
use crate::xml::parse_pipeline;

/// `generate`: benchmark parameters from a manifest, optionally reseeded.
pub fn generate(params: &Path, out: &Path, seed: Option<u64>) -> Result<Dataset> {
    let mut cfg = BenchmarkConfig::read(params)?;
    if let Some(s) = seed {
        cfg.sim.seed = s;
    }
    Ok(generate_benchmark(&cfg, out)?)
}

/// `evaluate`: scores a result directory and writes the report files.
pub fn evaluate_to(truth: &Path, result: &Path, report: &Path, opts: &EvalOptions) -> Result<EvalReport> {
    let r = evaluate(truth, result, opts)?;
    r.write(report)?;
    Ok(r)
}

/// One run of a parameter sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: String,
    /// Rows of the last table produced, or labels of the last label image.
    pub objects: usize,
    pub evaluation: Option<EvalReport>,
}

fn object_count(exec: &Execution) -> usize {
    for id in exec.trace.iter().rev() {
        for v in exec.outputs[id].iter().rev() {
            match v {
                Value::Table { table, .. } => return table.len(),
                Value::Labels(l) => return l.labels().len(),
                Value::Image(_) => {}
            }
        }
    }
    0
}

/// `sweep`: re-runs the configured pipeline once per value of one
/// `item.key` parameter. Run `k` writes into `sweep_<k>` below the output
/// directory; with a truth directory every run is also evaluated.
pub fn sweep(config: &Path, param: &str, values: &[String], truth: Option<&Path>, opts: &EvalOptions) -> Result<Vec<SweepRow>> {
    let (item, key) = param
        .split_once('.')
        .filter(|(i, k)| !i.is_empty() && !k.is_empty())
        .ok_or_else(|| Error::Input(format!("--param must look like item_id.Key, got {param:?}")))?;
    let base = RunConfig::read(config)?;
    let text = io_at(&base.xml_path, fs::read_to_string(&base.xml_path))?;
    let doc = parse_pipeline(&text)?;
    if doc.item(item).is_none() {
        return Err(Error::Input(format!("sweep parameter names unknown item {item}")));
    }
    let mut rows = Vec::new();
    for (k, v) in values.iter().enumerate() {
        let mut d = doc.clone();
        d.items.iter_mut().filter(|i| i.item_id == item).for_each(|i| {
            i.args.insert(key.to_string(), v.clone());
        });
        d.validate()?;
        let mut cfg = base.clone();
        cfg.output_dir = base.output_dir.join(format!("sweep_{k}"));
        let run = execute_pipeline(&d, &cfg)?;
        let evaluation = match truth {
            Some(t) => Some(evaluate(t, &cfg.output_dir, opts)?),
            None => None,
        };
        rows.push(SweepRow { value: v.clone(), objects: object_count(&run.execution), evaluation });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Sweep report: parameter, value, object count and mean scores per run.
pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut s = String::from("param,value,objects,seed_f,seg_f,ri,ji,merged,split,tra\n");
    for r in rows {
        let e = r.evaluation.as_ref();
        let m = |f: &dyn Fn(&crate::evaluate::FrameRow) -> Option<f64>| e.and_then(|e| e.mean(f));
        let _ = writeln!(
            s,
            "{param},{},{},{},{},{},{},{},{},{}",
            r.value,
            r.objects,
            opt(m(&|x| x.seeds.as_ref().map(|s| s.f_score))),
            opt(m(&|x| x.segments.as_ref().map(|s| s.f_score))),
            opt(m(&|x| x.segments.as_ref().map(|s| s.ri))),
            opt(m(&|x| x.segments.as_ref().map(|s| s.ji))),
            opt(m(&|x| x.segments.as_ref().map(|s| s.merged as f64))),
            opt(m(&|x| x.segments.as_ref().map(|s| s.split as f64))),
            opt(e.and_then(|e| e.tracking.as_ref()).map(|t| t.tra)),
        );
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        io_at(dir, fs::create_dir_all(dir))?;
    }
    io_at(path, fs::write(path, text))?;
    Ok(path.to_path_buf())
}
