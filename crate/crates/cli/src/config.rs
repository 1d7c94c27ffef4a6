//! Run configuration: a plain `key = value` file whose keys mirror the
//! command-line flags. Flags override the file; a repeated key (`cut`)
//! given on the command line replaces all of its file entries.
//!
//! ```text
//! # comment
//! input = data.xyz
//! degree = 2            # or 2,3 for per-direction degrees
//! tol = 30.0
//! sigma = 0.05
//! max-levels = 8
//! initial-mesh = 32x32  # or auto
//! breaks-x = -1,-0.5,0,0.2,0.4,1
//! domain = x0,y0,x1,y1  # or auto (data bounding box)
//! cut = x0,y0,x1,y1     # repeatable
//! guard = off           # on, off, or the excursion factor
//! clean = off
//! clean-max-levels = 6
//! clean-tol = 30.0
//! resolution = 200x200
//! threads = 4
//! dedup = error         # error, keep-first, average
//! out = results
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use thbfit::splinecore::Aabb;

use crate::error::{CliError, Result};
use crate::xyz::DedupMode;

pub const KEYS: &[&str] = &[
    "input",
    "degree",
    "tol",
    "sigma",
    "max-levels",
    "initial-mesh",
    "breaks-x",
    "breaks-y",
    "domain",
    "cut",
    "guard",
    "clean",
    "clean-max-levels",
    "clean-tol",
    "resolution",
    "threads",
    "dedup",
    "out",
];

/// Values per key, in input order.
pub type Entries = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfig {
    pub max_levels: usize,
    /// Pre-pass tolerance; the main tolerance when absent.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub degree: [usize; 2],
    pub tolerance: f64,
    pub sigma: f64,
    pub max_levels: usize,
    /// `None` picks a mesh from the data density.
    pub initial_mesh: Option<[usize; 2]>,
    pub breaks: [Option<Vec<f64>>; 2],
    /// `None` uses the data bounding box.
    pub domain: Option<Aabb<2>>,
    pub cuts: Vec<Aabb<2>>,
    pub guard: Option<f64>,
    pub clean: Option<CleanConfig>,
    pub resolution: [usize; 2],
    pub threads: Option<usize>,
    pub dedup: DedupMode,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            degree: [2, 2],
            tolerance: f64::NAN,
            sigma: 1e-6,
            max_levels: 6,
            initial_mesh: None,
            breaks: [None, None],
            domain: None,
            cuts: Vec::new(),
            guard: None,
            clean: None,
            resolution: [200, 200],
            threads: None,
            dedup: DedupMode::Error,
            out: PathBuf::from("thbfit-out"),
        }
    }
}

/// Parses the `key = value` document.
pub fn parse_entries(text: &str) -> Result<Entries> {
    let mut out = Entries::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Parse { line: n + 1, msg: "expected `key = value`".into() })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(CliError::Parse { line: n + 1, msg: format!("unknown key `{k}`") });
        }
        out.entry(k.to_string()).or_default().push(v.trim().to_string());
    }
    Ok(out)
}

fn number<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| CliError::Config(format!("{key}: `{v}` is not a valid number")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| number(key, s)).collect()
}

/// `a` or `a,b` / `axb` as a per-direction pair.
fn pair(key: &str, v: &str) -> Result<[usize; 2]> {
    let parts: Vec<&str> = v.split([',', 'x']).collect();
    match parts.as_slice() {
        [a] => {
            let a = number(key, a)?;
            Ok([a, a])
        }
        [a, b] => Ok([number(key, a)?, number(key, b)?]),
        _ => Err(CliError::Config(format!("{key}: expected one or two values, got `{v}`"))),
    }
}

fn bbox(key: &str, v: &str) -> Result<Aabb<2>> {
    match list(key, v)?.as_slice() {
        &[x0, y0, x1, y1] if x0 < x1 && y0 < y1 => Ok(Aabb::new([x0, y0], [x1, y1])),
        _ => Err(CliError::Config(format!("{key}: expected x0,y0,x1,y1 with x0 < x1 and y0 < y1, got `{v}`"))),
    }
}

fn switch(key: &str, v: &str) -> Result<bool> {
    match v {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected on or off, got `{v}`"))),
    }
}

impl RunConfig {
    pub fn from_entries(entries: &Entries) -> Result<Self> {
        let mut cfg = Self::default();
        let mut clean = false;
        let mut clean_cfg = CleanConfig { max_levels: 6, tolerance: None };
        for (key, values) in entries {
            if key != "cut" && values.len() > 1 {
                return Err(CliError::Config(format!("{key} given {} times", values.len())));
            }
            for v in values {
                let v = v.as_str();
                match key.as_str() {
                    "input" => cfg.input = Some(PathBuf::from(v)),
                    "degree" => cfg.degree = pair(key, v)?,
                    "tol" => cfg.tolerance = number(key, v)?,
                    "sigma" => cfg.sigma = number(key, v)?,
                    "max-levels" => cfg.max_levels = number(key, v)?,
                    "initial-mesh" => cfg.initial_mesh = if v == "auto" { None } else { Some(pair(key, v)?) },
                    "breaks-x" => cfg.breaks[0] = Some(list(key, v)?),
                    "breaks-y" => cfg.breaks[1] = Some(list(key, v)?),
                    "domain" => cfg.domain = if v == "auto" { None } else { Some(bbox(key, v)?) },
                    "cut" => cfg.cuts.push(bbox(key, v)?),
                    "guard" => {
                        cfg.guard = match v {
                            "off" => None,
                            "on" => Some(0.5),
                            tau => Some(number(key, tau)?),
                        }
                    }
                    "clean" => clean = switch(key, v)?,
                    "clean-max-levels" => clean_cfg.max_levels = number(key, v)?,
                    "clean-tol" => clean_cfg.tolerance = Some(number(key, v)?),
                    "resolution" => cfg.resolution = pair(key, v)?,
                    "threads" => cfg.threads = Some(number(key, v)?),
                    "dedup" => cfg.dedup = v.parse()?,
                    "out" => cfg.out = PathBuf::from(v),
                    other => return Err(CliError::Config(format!("unknown key `{other}`"))),
                }
            }
        }
        cfg.clean = clean.then_some(clean_cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CliError::Config("tol must be a positive number".into()));
        }
        if self.resolution.iter().any(|&r| r < 2) {
            return Err(CliError::Config("resolution needs at least 2 samples per direction".into()));
        }
        if self.guard.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err(CliError::Config("guard factor must be non-negative".into()));
        }
        Ok(())
    }
}
