//! Run configuration files: one `--directive arg, arg, ...` per line,
//! terminated by `--end`.

use std::path::{Path, PathBuf};

use crate::error::{io_at, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputSpec {
    pub index: usize,
    pub path: PathBuf,
    pub channels: u32,
    pub pixel_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    /// Output directory with the sub directory already appended.
    pub output_dir: PathBuf,
    /// In declaration order.
    pub inputs: Vec<InputSpec>,
    pub xml_path: PathBuf,
    pub seed: u64,
    pub lockfile: bool,
    pub subfolder: Vec<String>,
    /// File name tokens: `imagename`, `filterid`, `filtername`.
    pub output_format: Vec<String>,
    /// Lines that were skipped.
    pub warnings: Vec<String>,
}

fn format_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::ConfigFormat { line, msg: msg.into() })
}

fn args_of(rest: &str) -> Vec<String> {
    if rest.trim().is_empty() {
        return Vec::new();
    }
    rest.split(',').map(|a| a.trim().to_string()).collect()
}

fn arity(line: usize, dir: &str, args: &[String], lo: usize, hi: usize) -> Result<()> {
    if args.len() < lo || args.len() > hi || args.iter().take(lo).any(String::is_empty) {
        let want = if lo == hi { format!("{lo}") } else { format!("{lo} to {hi}") };
        return format_err(line, format!("{dir} takes {want} argument(s), got {:?}", args.join(", ")));
    }
    Ok(())
}

/// Parses a run configuration. Paths are kept as written.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut output_dir = None;
    let mut inputs: Vec<InputSpec> = Vec::new();
    let mut xml_path = None;
    let mut seed = 0;
    let mut lockfile = false;
    let mut subfolder = Vec::new();
    let mut output_format = vec!["imagename".to_string(), "filterid".to_string(), "filtername".to_string()];
    let mut warnings = Vec::new();
    let mut ended = false;
    let mut last = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last = line;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        if !l.starts_with("--") {
            return format_err(line, format!("expected a --directive, got {l:?}"));
        }
        let (dir, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let args = args_of(rest);
        match dir {
            "--end" => {
                ended = true;
                break;
            }
            "--output" => {
                arity(line, dir, &args, 1, 2)?;
                let mut p = PathBuf::from(&args[0]);
                if let Some(sub) = args.get(1).filter(|s| !s.is_empty()) {
                    p.push(sub);
                }
                output_dir = Some(p);
            }
            "--input" => {
                arity(line, dir, &args, 2, 4)?;
                let Ok(index) = args[0].parse::<usize>() else {
                    return format_err(line, format!("input index {:?} is not a count", args[0]));
                };
                if inputs.iter().any(|i| i.index == index) {
                    return format_err(line, format!("input index {index} given twice"));
                }
                let channels = match args.get(2) {
                    Some(c) => match c.parse::<u32>() {
                        Ok(c) => c,
                        Err(_) => return format_err(line, format!("channel count {c:?} is not a count")),
                    },
                    None => 1,
                };
                let pixel_type = args.get(3).cloned().unwrap_or_else(|| "float".into());
                inputs.push(InputSpec { index, path: PathBuf::from(&args[1]), channels, pixel_type });
            }
            "--xml" => {
                arity(line, dir, &args, 1, 1)?;
                xml_path = Some(PathBuf::from(&args[0]));
            }
            "--seed" => {
                arity(line, dir, &args, 1, 1)?;
                seed = match args[0].parse::<u64>() {
                    Ok(s) => s,
                    Err(_) => return format_err(line, format!("seed {:?} is not an integer", args[0])),
                };
            }
            "--lockfile" => {
                arity(line, dir, &args, 1, 1)?;
                lockfile = match args[0].to_ascii_lowercase().as_str() {
                    "on" | "1" | "true" => true,
                    "off" | "0" | "false" => false,
                    other => return format_err(line, format!("--lockfile expects on or off, got {other:?}")),
                };
            }
            "--subfolder" => subfolder = args,
            "--outputformat" => {
                if let Some(t) = args.iter().find(|t| !matches!(t.as_str(), "imagename" | "filterid" | "filtername")) {
                    return format_err(line, format!("unknown output name token {t:?}"));
                }
                output_format = args;
            }
            other => warnings.push(format!("line {line}: unknown directive {other} ignored")),
        }
    }
    if !ended {
        return format_err(last.max(1), "missing --end");
    }
    let Some(xml_path) = xml_path else {
        return Err(Error::ConfigMissing("no --xml line".into()));
    };
    if inputs.is_empty() {
        return Err(Error::ConfigMissing("no --input line".into()));
    }
    Ok(RunConfig {
        output_dir: output_dir.unwrap_or_else(|| PathBuf::from(".")),
        inputs,
        xml_path,
        seed,
        lockfile,
        subfolder,
        output_format,
        warnings,
    })
}

impl RunConfig {
    /// Reads a configuration file; relative paths resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = io_at(path, std::fs::read_to_string(path))?;
        let mut cfg = parse_run_config(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.xml_path);
        self.inputs.iter_mut().for_each(|i| fix(&mut i.path));
    }

    pub fn input(&self, index: usize) -> Option<&InputSpec> {
        self.inputs.iter().find(|i| i.index == index)
    }

    /// Renders the configuration back into the line format.
    pub fn to_text(&self) -> String {
        let mut s = format!("--output {}\n", self.output_dir.display());
        for i in &self.inputs {
            s += &format!("--input {}, {}, {}, {}\n", i.index, i.path.display(), i.channels, i.pixel_type);
        }
        s += &format!("--xml {}\n--seed {}\n", self.xml_path.display(), self.seed);
        s += &format!("--lockfile {}\n", if self.lockfile { "on" } else { "off" });
        if !self.subfolder.is_empty() {
            s += &format!("--subfolder {}\n", self.subfolder.join(", "));
        }
        s += &format!("--outputformat {}\n--end\n", self.output_format.join(", "));
        s
    }
}
