use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use thbfit::localfit::ScatteredDataset;

use crate::error::{CliError, Result};

/// What to do with repeated sample locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DedupMode {
    #[default]
    Error,
    KeepFirst,
    Average,
}

impl FromStr for DedupMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Self::Error),
            "keep-first" => Ok(Self::KeepFirst),
            "average" => Ok(Self::Average),
            other => Err(CliError::Config(format!("unknown dedup mode `{other}` (error, keep-first, average)"))),
        }
    }
}

fn key(p: [f64; 2]) -> [u64; 2] {
    p.map(|v| if v == 0.0 { 0u64 } else { v.to_bits() })
}

/// Parses `x y z` lines; blank lines and lines starting with `#` are skipped.
pub fn parse_xyz(text: &str, mode: DedupMode) -> Result<ScatteredDataset<2>> {
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut sums: Vec<(f64, usize)> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    let mut seen: HashMap<[u64; 2], usize> = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(CliError::Parse { line, msg: format!("expected 3 columns, found {}", fields.len()) });
        }
        let mut v = [0.0f64; 3];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| CliError::Parse { line, msg: format!("`{f}` is not a number") })?;
            if !slot.is_finite() {
                return Err(CliError::Parse { line, msg: format!("`{f}` is not finite") });
            }
        }
        let p = [v[0], v[1]];
        match seen.get(&key(p)) {
            Some(&i) => match mode {
                DedupMode::Error => return Err(CliError::Duplicate { line, first: lines[i] }),
                DedupMode::KeepFirst => {}
                DedupMode::Average => {
                    sums[i].0 += v[2];
                    sums[i].1 += 1;
                }
            },
            None => {
                seen.insert(key(p), points.len());
                points.push(p);
                sums.push((v[2], 1));
                lines.push(line);
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::EmptyInput);
    }
    let values = sums.iter().map(|(s, n)| if *n == 1 { *s } else { s / *n as f64 }).collect();
    Ok(ScatteredDataset::new(points, values)?)
}

pub fn load_xyz(path: &Path, mode: DedupMode) -> Result<ScatteredDataset<2>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_xyz(&text, mode)
}

/// One `x y z` line per sample with 17 significant digits.
pub fn write_xyz<W: Write>(w: &mut W, data: &ScatteredDataset<2>) -> io::Result<()> {
    for (p, v) in data.points().iter().zip(data.values()) {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", p[0], p[1], v)?;
    }
    Ok(())
}
