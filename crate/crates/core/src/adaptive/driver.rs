use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::radii::{kj_schedule, support_radius, LevelRadii};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::hiermesh::{DomainHierarchy, QuasiInterpolant};
use crate::localfit::{fit_lambda, FitData, OscillationGuard, ScatteredDataset};
use crate::splinecore::{index_product, CellIndex, MultiIndex, TensorSpace};

/// Function key `(level, J)`.
pub type FnKey<const R: usize> = (usize, MultiIndex<R>);

/// Settings of the adaptive fit.
#[derive(Debug, Clone)]
pub struct FitConfig<const R: usize> {
    /// Level-0 spline space; its degrees are the spline degrees.
    pub space: TensorSpace<R>,
    pub tolerance: f64,
    pub sigma: f64,
    pub max_levels: usize,
    pub guard: Option<OscillationGuard>,
    /// Functions whose support misses this domain are dropped.
    pub domain: Option<DomainSpec<R>>,
    /// Worker threads for the local fits; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl<const R: usize> FitConfig<R> {
    pub fn new(space: TensorSpace<R>, tolerance: f64, sigma: f64, max_levels: usize) -> Self {
        Self { space, tolerance, sigma, max_levels, guard: None, domain: None, threads: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return Err(Error::InvalidConfig(format!("sigma {} must lie in (0, 1]", self.sigma)));
        }
        if self.max_levels < 2 {
            return Err(Error::InvalidConfig(format!("max levels {} must be at least 2", self.max_levels)));
        }
        let (cells, degrees) = (self.space.num_cells(), self.space.degrees());
        if let Some(h) = (0..R).find(|&h| cells[h] < degrees[h] + 1) {
            return Err(Error::InvalidConfig(format!(
                "direction {h} has {} cells, needs at least {}",
                cells[h],
                degrees[h] + 1
            )));
        }
        if let Some(dom) = &self.domain {
            let b = self.space.bounds();
            if (0..R).any(|h| dom.base().lo[h] < b.lo[h] || dom.base().hi[h] > b.hi[h]) {
                return Err(Error::InvalidConfig("domain box exceeds the spline domain".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        Ok(())
    }

    fn keeps(&self, space: &TensorSpace<R>, j: &MultiIndex<R>) -> bool {
        self.domain.as_ref().is_none_or(|d| d.meets(&space.support_box(j)))
    }
}

/// Pointwise residuals at the data sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub values: Vec<f64>,
    pub max: f64,
    pub rms: f64,
}

/// Summary of one pass of the adaptive loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport<const R: usize> {
    pub levels: usize,
    /// Cells per direction of the finest level's full grid.
    pub elements: [usize; R],
    pub ndof: usize,
    pub e_max: f64,
    pub e_rms: f64,
    /// `degree_counts[t]` active functions whose local fit used degree `t`.
    pub degree_counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    FailureInitialLambda,
    FailureMaxLevels,
}

impl FitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::FailureInitialLambda => "failure_initial_lambda",
            FitStatus::FailureMaxLevels => "failure_max_levels",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome<const R: usize> {
    pub status: FitStatus,
    /// Last quasi-interpolant; absent only if the initial fit failed.
    pub qi: Option<QuasiInterpolant<R>>,
    pub reports: Vec<IterationReport<R>>,
    /// Residuals of `qi` at the data sites.
    pub residuals: Option<Residuals>,
    /// Degree chosen by each active function of `qi`.
    pub degrees: BTreeMap<FnKey<R>, usize>,
    /// Cause of a failure.
    pub failure: Option<Error>,
}

/// `|Q(X_i) - f_i|` for every sample.
pub fn compute_errors<const R: usize>(q: &QuasiInterpolant<R>, data: &ScatteredDataset<R>) -> Result<Residuals> {
    let values: Vec<f64> = data
        .points()
        .par_iter()
        .zip(data.values())
        .map(|(x, f)| q.eval(x).map(|v| (v - f).abs()))
        .collect::<Result<_>>()?;
    let max = values.iter().copied().fold(0.0, f64::max);
    let rms = (values.iter().map(|e| e * e).sum::<f64>() / values.len() as f64).sqrt();
    Ok(Residuals { values, max, rms })
}

/// Active functions of `q` whose closed support contains a sample with
/// residual above `tolerance`.
pub fn mark<const R: usize>(
    q: &QuasiInterpolant<R>,
    data: &ScatteredDataset<R>,
    residuals: &[f64],
    tolerance: f64,
) -> BTreeSet<FnKey<R>> {
    let h = q.hierarchy();
    let mut marked = BTreeSet::new();
    for (x, _) in data.points().iter().zip(residuals).filter(|(_, e)| **e > tolerance) {
        for level in 0..h.num_levels() {
            for j in index_product(h.space(level).functions_touching(x)) {
                let key = (level, MultiIndex(j));
                if q.coefficient(level, &key.1).is_some() {
                    marked.insert(key);
                }
            }
        }
    }
    marked
}

/// Subdivides the active cells inside the support of every marked function.
pub fn refine<const R: usize>(
    h: &DomainHierarchy<R>,
    marked: &BTreeSet<FnKey<R>>,
    max_levels: usize,
) -> Result<DomainHierarchy<R>> {
    let mut cells = BTreeSet::new();
    for (level, j) in marked {
        if !h.is_active_function(*level, j) {
            return Err(Error::InactiveFunction { level: *level });
        }
        for c in index_product(h.space(*level).support_cells(j)) {
            let c = CellIndex(c);
            if h.is_active_cell(*level, &c) {
                cells.insert((*level, c));
            }
        }
    }
    let cells: Vec<_> = cells.into_iter().collect();
    let next = h.refine_cells(&cells)?;
    if next.num_levels() > max_levels {
        return Err(Error::TooManyLevels { levels: next.num_levels(), max: max_levels });
    }
    Ok(next)
}

struct Fitter<'a, const R: usize> {
    cfg: &'a FitConfig<R>,
    data: FitData<R>,
    pool: Option<rayon::ThreadPool>,
}

impl<const R: usize> Fitter<'_, R> {
    /// Local fits for `keys`, in order, run on the worker pool.
    fn fit_batch(
        &self,
        h: &DomainHierarchy<R>,
        radii: &LevelRadii,
        keys: &[FnKey<R>],
    ) -> Result<Vec<(f64, usize)>> {
        let run = || {
            keys.par_iter()
                .map(|(level, j)| {
                    let space = h.space(*level);
                    let k = kj_schedule(*level, support_radius(space, j), radii);
                    fit_lambda(space, j, &self.data, self.cfg.sigma, k, self.cfg.guard.as_ref())
                        .map(|r| (r.lambda, r.degree))
                })
                .collect::<Result<Vec<_>>>()
        };
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }
}

fn report<const R: usize>(
    q: &QuasiInterpolant<R>,
    degrees: &BTreeMap<FnKey<R>, usize>,
    res: &Residuals,
    max_degree: usize,
) -> IterationReport<R> {
    let h = q.hierarchy();
    let mut degree_counts = vec![0; max_degree + 1];
    for t in degrees.values() {
        degree_counts[*t] += 1;
    }
    IterationReport {
        levels: h.num_levels(),
        elements: h.space(h.num_levels() - 1).num_cells(),
        ndof: q.ndof(),
        e_max: res.max,
        e_rms: res.rms,
        degree_counts,
    }
}

/// Adaptive hierarchical quasi-interpolation of `dataset`.
///
/// Returns `Err` for invalid input; fitting failures are reported through
/// [`FitOutcome::status`].
pub fn fit_adaptive<const R: usize>(dataset: &ScatteredDataset<R>, cfg: &FitConfig<R>) -> Result<FitOutcome<R>> {
    cfg.validate()?;
    let bounds = cfg.space.bounds();
    for x in dataset.points() {
        if !bounds.contains(x) || cfg.domain.as_ref().is_some_and(|d| !d.contains(x)) {
            return Err(Error::InvalidDataset(format!("sample {x:?} lies outside the fitting domain")));
        }
    }
    let pool = cfg
        .threads
        .map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build())
        .transpose()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let fitter = Fitter { cfg, data: FitData::for_space(dataset.clone(), &cfg.space), pool };
    let max_degree = cfg.space.min_degree();

    let mut h = DomainHierarchy::new(cfg.space.clone());
    let mut radii = LevelRadii::new(&cfg.space)?;
    let initial: Vec<FnKey<R>> = h.base().indices().map(|j| (0, MultiIndex(j))).filter(|(l, j)| cfg.keeps(h.space(*l), j)).collect();
    let fits = match fitter.fit_batch(&h, &radii, &initial) {
        Ok(f) => f,
        Err(e) => {
            return Ok(FitOutcome {
                status: FitStatus::FailureInitialLambda,
                qi: None,
                reports: Vec::new(),
                residuals: None,
                degrees: BTreeMap::new(),
                failure: Some(e),
            })
        }
    };
    let mut coeffs: BTreeMap<FnKey<R>, f64> = BTreeMap::new();
    let mut degrees: BTreeMap<FnKey<R>, usize> = BTreeMap::new();
    for (key, (lambda, degree)) in initial.into_iter().zip(fits) {
        coeffs.insert(key, lambda);
        degrees.insert(key, degree);
    }
    let mut q = QuasiInterpolant::new(h.clone(), coeffs.clone())?;
    let mut res = compute_errors(&q, dataset)?;
    let mut reports = vec![report(&q, &degrees, &res, max_degree)];

    let finish = |status, q, reports, res, degrees, failure| {
        Ok(FitOutcome { status, qi: Some(q), reports, residuals: Some(res), degrees, failure })
    };
    while res.max > cfg.tolerance {
        let marked = mark(&q, dataset, &res.values, cfg.tolerance);
        let next = match refine(&h, &marked, cfg.max_levels) {
            Ok(next) => next,
            Err(e @ Error::TooManyLevels { .. }) => {
                return finish(FitStatus::FailureMaxLevels, q, reports, res, degrees, Some(e));
            }
            Err(e) => return Err(e),
        };
        while radii.num_levels() < next.num_levels() {
            radii.push_level(next.space(radii.num_levels()));
        }
        let active = next.active_set();
        coeffs.retain(|(l, j), _| active.contains(*l, j));
        degrees.retain(|k, _| coeffs.contains_key(k));
        let fresh: Vec<FnKey<R>> = active
            .iter()
            .map(|(l, j)| (l, *j))
            .filter(|k| !coeffs.contains_key(k) && cfg.keeps(next.space(k.0), &k.1))
            .collect();
        let fits = fitter.fit_batch(&next, &radii, &fresh)?;
        for (key, (lambda, degree)) in fresh.into_iter().zip(fits) {
            coeffs.insert(key, lambda);
            degrees.insert(key, degree);
        }
        h = next;
        q = QuasiInterpolant::new(h.clone(), coeffs.clone())?;
        res = compute_errors(&q, dataset)?;
        reports.push(report(&q, &degrees, &res, max_degree));
    }
    finish(FitStatus::Converged, q, reports, res, degrees, None)
}
