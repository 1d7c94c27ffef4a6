use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use thbfit::adaptive::{fit_adaptive, FitConfig, FitOutcome, FitStatus};
use thbfit::domain::DomainSpec;
use thbfit::hiermesh::QuasiInterpolant;
use thbfit::localfit::{OscillationGuard, ScatteredDataset};
use thbfit::splinecore::{poly_dim, Aabb, KnotVector, MultiIndex, TensorSpace};

use crate::config::{CleanConfig, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{sci4, write_degrees_csv, write_reports_csv};
use crate::xyz::{load_xyz, write_xyz};

/// Keep-predicate dropping functions whose support misses `dom`.
pub fn trim_basis(dom: &DomainSpec<2>) -> impl Fn(&TensorSpace<2>, &MultiIndex<2>) -> bool + '_ {
    move |space, j| dom.meets(&space.support_box(j))
}

/// Cells per direction so that the average cell holds at least as many
/// samples as a local polynomial of total degree `min(degree)` has
/// coefficients, and never fewer than `degree + 1` cells.
pub fn auto_mesh(n: usize, bounds: &Aabb<2>, degree: [usize; 2]) -> [usize; 2] {
    let dim = poly_dim(2, degree[0].min(degree[1]));
    let target = (n / dim).max(1) as f64;
    let (w, h) = (bounds.hi[0] - bounds.lo[0], bounds.hi[1] - bounds.lo[1]);
    let kx = ((target * w / h).sqrt().floor() as usize).max(1);
    let ky = ((target / kx as f64).floor() as usize).max(1);
    [kx.max(degree[0] + 1), ky.max(degree[1] + 1)]
}

/// Domain of the fit: the configured box or the data bounding box, minus cuts.
pub fn build_domain(cfg: &RunConfig, data: &ScatteredDataset<2>) -> Result<DomainSpec<2>> {
    let base = cfg.domain.unwrap_or_else(|| data.bounding_box());
    if (0..2).any(|h| !(base.lo[h] < base.hi[h])) {
        return Err(CliError::Config("data bounding box is degenerate; give an explicit domain".into()));
    }
    let dom = DomainSpec::new(base, cfg.cuts.clone())?;
    if let Some(p) = data.points().iter().find(|p| !dom.contains(p)) {
        return Err(CliError::Config(format!("data point ({}, {}) lies outside the domain", p[0], p[1])));
    }
    Ok(dom)
}

pub fn build_space(cfg: &RunConfig, n: usize, bounds: &Aabb<2>) -> Result<TensorSpace<2>> {
    let cells = cfg.initial_mesh.unwrap_or_else(|| auto_mesh(n, bounds, cfg.degree));
    let mut dirs = Vec::with_capacity(2);
    for h in 0..2 {
        let kv = match &cfg.breaks[h] {
            Some(b) => {
                if b.first() != Some(&bounds.lo[h]) || b.last() != Some(&bounds.hi[h]) {
                    return Err(CliError::Config(format!(
                        "breakpoints of direction {h} must run from {} to {}",
                        bounds.lo[h], bounds.hi[h]
                    )));
                }
                KnotVector::clamped(b, cfg.degree[h])?
            }
            None => KnotVector::uniform(bounds.lo[h], bounds.hi[h], cells[h], cfg.degree[h])?,
        };
        dirs.push(kv);
    }
    Ok(TensorSpace::new(dirs.try_into().expect("two directions"))?)
}

pub fn fit_config(cfg: &RunConfig, space: TensorSpace<2>, dom: &DomainSpec<2>) -> FitConfig<2> {
    let mut fc = FitConfig::new(space, cfg.tolerance, cfg.sigma, cfg.max_levels);
    fc.guard = cfg.guard.map(|tau| OscillationGuard { tau });
    fc.domain = (!dom.cuts().is_empty()).then(|| dom.clone());
    fc.threads = cfg.threads;
    fc
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cleaned {
    pub data: ScatteredDataset<2>,
    pub removed: usize,
    pub threshold: f64,
}

/// Fits with the pre-pass settings and drops samples whose residual
/// exceeds the residual RMS. Residuals at rounding level
/// (`1e-12 * max|f|`) never count as outliers, so data the fit reproduces
/// up to rounding is returned unchanged.
pub fn clean_outliers(data: &ScatteredDataset<2>, fit: &FitConfig<2>, clean: &CleanConfig) -> Result<Cleaned> {
    let mut pre = fit.clone();
    pre.max_levels = clean.max_levels;
    pre.tolerance = clean.tolerance.unwrap_or(fit.tolerance);
    let out = fit_adaptive(data, &pre)?;
    let res = match (out.status, out.residuals) {
        (FitStatus::FailureInitialLambda, _) | (_, None) => {
            return Err(out.failure.unwrap_or(thbfit::Error::EmptyNeighborhood { enlargements: 0 }).into())
        }
        (_, Some(res)) => res,
    };
    let scale = data.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = res.rms.max(1e-12 * scale);
    let removed = res.values.iter().filter(|e| **e > threshold).count();
    let data = if removed == 0 { data.clone() } else { data.subset(|i| res.values[i] <= threshold)? };
    Ok(Cleaned { data, removed, threshold })
}

/// Regular grid over the domain box, row by row in `y`; `z` is NaN outside the domain.
pub fn sample_surface(q: &QuasiInterpolant<2>, dom: &DomainSpec<2>, resolution: [usize; 2]) -> Result<Vec<[f64; 3]>> {
    if resolution.iter().any(|&r| r < 2) {
        return Err(CliError::Config("resolution needs at least 2 samples per direction".into()));
    }
    let b = dom.base();
    let coord = |h: usize, i: usize| {
        if i + 1 == resolution[h] {
            b.hi[h]
        } else {
            b.lo[h] + (b.hi[h] - b.lo[h]) * i as f64 / (resolution[h] - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(resolution[0] * resolution[1]);
    for iy in 0..resolution[1] {
        for ix in 0..resolution[0] {
            let x = [coord(0, ix), coord(1, iy)];
            let z = if dom.contains(&x) { q.eval(&x)? } else { f64::NAN };
            out.push([x[0], x[1], z]);
        }
    }
    Ok(out)
}

fn float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// Writes the report CSVs, coefficient and mesh dumps, and the surface grid.
pub fn export(out_dir: &Path, outcome: &FitOutcome<2>, dom: &DomainSpec<2>, resolution: [usize; 2]) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write_file(&out_dir.join("reports.csv"), |w| write_reports_csv(w, &outcome.reports))?;
    write_file(&out_dir.join("degrees.csv"), |w| write_degrees_csv(w, &outcome.reports))?;
    let Some(q) = &outcome.qi else {
        return Ok(());
    };
    write_file(&out_dir.join("coefficients.txt"), |w| {
        writeln!(w, "# level i j lambda")?;
        for ((level, j), v) in q.coefficients() {
            writeln!(w, "{level} {} {} {}", j.0[0], j.0[1], float(*v))?;
        }
        Ok(())
    })?;
    write_file(&out_dir.join("mesh.txt"), |w| q.write_mesh_dump(w))?;
    let grid = sample_surface(q, dom, resolution)?;
    write_file(&out_dir.join("surface.xyz"), |w| {
        for [x, y, z] in &grid {
            writeln!(w, "{} {} {}", float(*x), float(*y), float(*z))?;
        }
        Ok(())
    })
}

/// Summary of a command-line run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcome: FitOutcome<2>,
    pub cleaned: Option<Cleaned>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        match self.outcome.status {
            FitStatus::Converged => 0,
            FitStatus::FailureInitialLambda => 2,
            FitStatus::FailureMaxLevels => 3,
        }
    }
}

/// Loads, optionally cleans, fits and exports according to `cfg`.
pub fn run(cfg: &RunConfig, log: &mut impl Write) -> Result<RunSummary> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Config("no input file given".into()))?;
    let mut data = load_xyz(input, cfg.dedup)?;
    let dom = build_domain(cfg, &data)?;
    let space = build_space(cfg, data.len(), dom.base())?;
    let fc = fit_config(cfg, space, &dom);
    let say = |log: &mut dyn Write, msg: String| writeln!(log, "{msg}").map_err(|e| CliError::io(Path::new("<log>"), e));
    say(log, format!("{} samples, initial mesh {}x{}", data.len(), fc.space.num_cells()[0], fc.space.num_cells()[1]))?;

    let cleaned = match &cfg.clean {
        Some(clean) => {
            let c = clean_outliers(&data, &fc, clean)?;
            say(log, format!("cleaning removed {} samples above residual RMS {}", c.removed, sci4(c.threshold)))?;
            fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
            write_file(&cfg.out.join("cleaned.xyz"), |w| write_xyz(w, &c.data))?;
            data = c.data.clone();
            Some(c)
        }
        None => None,
    };

    let outcome = fit_adaptive(&data, &fc)?;
    for r in &outcome.reports {
        say(
            log,
            format!("M={} elements={}x{} NDOF={} e_max={} e_RMS={}", r.levels, r.elements[0], r.elements[1], r.ndof, sci4(r.e_max), sci4(r.e_rms)),
        )?;
    }
    say(log, format!("status: {}", outcome.status.as_str()))?;
    if let Some(e) = &outcome.failure {
        say(log, format!("cause: {e}"))?;
    }
    export(&cfg.out, &outcome, &dom, cfg.resolution)?;
    Ok(RunSummary { outcome, cleaned })
}
