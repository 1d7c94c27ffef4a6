use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use super::hierarchy::DomainHierarchy;
use crate::error::{Error, Result};
use crate::splinecore::{apply_refinement, index_product, MultiIndex, SplineCoeffs};

type LevelCoeffs<const R: usize> = HashMap<MultiIndex<R>, f64>;

/// Zeroes the level-`level+1` coefficients whose support lies in `Omega^{level+1}`.
pub fn truncate_once<const R: usize>(
    coeffs: &SplineCoeffs<R>,
    h: &DomainHierarchy<R>,
    level: usize,
) -> Result<SplineCoeffs<R>> {
    let fine = level + 1;
    if fine >= h.num_levels() {
        return Err(Error::LevelOutOfRange { level: fine, levels: h.num_levels() });
    }
    let mut out = coeffs.clone();
    for (j, v) in out.iter_mut() {
        if h.support_in_domain(fine, j) {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Pushes level-`coarse` coefficients one level down. Only functions meeting
/// `Omega^{coarse+1}` are produced; with `truncate`, those supported inside
/// `Omega^{coarse+1}` are dropped and `fresh(j)` is added for them instead.
fn push_down<const R: usize>(
    h: &DomainHierarchy<R>,
    coarse: usize,
    from: &LevelCoeffs<R>,
    truncate: bool,
    fresh: impl Fn(&MultiIndex<R>) -> f64,
) -> LevelCoeffs<R> {
    let fine = coarse + 1;
    let rel = h.refinement(coarse);
    let mut out = HashMap::new();
    for j in h.functions_touching_domain(fine) {
        let v = if truncate && h.support_in_domain(fine, &j) {
            fresh(&j)
        } else {
            apply_refinement(rel, &j, |i| from.get(i).copied().unwrap_or(0.0))
        };
        if v != 0.0 {
            out.insert(j, v);
        }
    }
    out
}

/// Sum of `coeffs[I] * B_I(x)` over the functions of the active cell holding `x`.
fn eval_levels<const R: usize>(
    h: &DomainHierarchy<R>,
    first_level: usize,
    levels: &[LevelCoeffs<R>],
    x: &[f64; R],
) -> Result<f64> {
    let (level, cell) = h.locate(x)?;
    if level < first_level {
        return Ok(0.0);
    }
    let coeffs = &levels[level - first_level];
    if coeffs.is_empty() {
        return Ok(0.0);
    }
    let basis = h.space(level).local_basis(&cell, x);
    let mut acc = 0.0;
    for p in index_product(basis.each_ref().map(|(_, v)| 0..v.len())) {
        let j = MultiIndex(std::array::from_fn(|d| basis[d].0 + p[d]));
        if let Some(c) = coeffs.get(&j) {
            acc += c * (0..R).map(|d| basis[d].1[p[d]]).product::<f64>();
        }
    }
    Ok(acc)
}

/// `Trunc^{level+1}(B_J^level)`, stored level by level on the functions that
/// meet each `Omega^m`.
#[derive(Debug, Clone)]
pub struct TruncatedFunction<const R: usize> {
    level: usize,
    index: MultiIndex<R>,
    levels: Vec<LevelCoeffs<R>>,
}

impl<const R: usize> TruncatedFunction<R> {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn index(&self) -> MultiIndex<R> {
        self.index
    }

    /// Kept coefficients at hierarchy level `m >= self.level()`.
    pub fn coeffs_at(&self, m: usize) -> Option<&HashMap<MultiIndex<R>, f64>> {
        m.checked_sub(self.level).and_then(|k| self.levels.get(k))
    }

    pub fn eval(&self, h: &DomainHierarchy<R>, x: &[f64; R]) -> Result<f64> {
        eval_levels(h, self.level, &self.levels, x)
    }
}

/// Builds the truncated hierarchical B-spline with mother `B_J^level`.
pub fn build_truncated<const R: usize>(
    h: &DomainHierarchy<R>,
    level: usize,
    j: MultiIndex<R>,
) -> Result<TruncatedFunction<R>> {
    if !h.is_active_function(level, &j) {
        return Err(Error::InactiveFunction { level });
    }
    let mut levels = vec![HashMap::from([(j, 1.0)])];
    for m in level..h.num_levels() - 1 {
        let next = push_down(h, m, levels.last().expect("nonempty"), true, |_| 0.0);
        levels.push(next);
    }
    Ok(TruncatedFunction { level, index: j, levels })
}

/// Hierarchical quasi-interpolant `sum_l sum_{J in A^l} lambda_J^l T_J^l`.
///
/// Evaluation uses the recursion `s^0 = sum lambda^0 B^0`,
/// `s^{l+1} = trunc^{l+1}(s^l) + sum lambda^{l+1} B^{l+1}`, whose level-`l`
/// coefficients are kept only for functions meeting `Omega^l`; on an active
/// cell of level `l` the quasi-interpolant coincides with `s^l`.
#[derive(Debug, Clone)]
pub struct QuasiInterpolant<const R: usize> {
    hierarchy: DomainHierarchy<R>,
    coeffs: BTreeMap<(usize, MultiIndex<R>), f64>,
    levels: Vec<LevelCoeffs<R>>,
}

impl<const R: usize> QuasiInterpolant<R> {
    /// `coeffs` must be keyed by active functions; absent active functions
    /// contribute nothing.
    pub fn new(hierarchy: DomainHierarchy<R>, coeffs: BTreeMap<(usize, MultiIndex<R>), f64>) -> Result<Self> {
        for (level, j) in coeffs.keys() {
            if !hierarchy.is_active_function(*level, j) {
                return Err(Error::InactiveFunction { level: *level });
            }
        }
        let lambda = |l: usize, j: &MultiIndex<R>| coeffs.get(&(l, *j)).copied().unwrap_or(0.0);
        let mut levels: Vec<LevelCoeffs<R>> = Vec::with_capacity(hierarchy.num_levels());
        levels.push(coeffs.iter().filter(|((l, _), _)| *l == 0).map(|((_, j), v)| (*j, *v)).collect());
        for m in 0..hierarchy.num_levels() - 1 {
            let next = push_down(&hierarchy, m, &levels[m], true, |j| lambda(m + 1, j));
            levels.push(next);
        }
        Ok(Self { hierarchy, coeffs, levels })
    }

    pub fn hierarchy(&self) -> &DomainHierarchy<R> {
        &self.hierarchy
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, MultiIndex<R>), f64> {
        &self.coeffs
    }

    pub fn coefficient(&self, level: usize, j: &MultiIndex<R>) -> Option<f64> {
        self.coeffs.get(&(level, *j)).copied()
    }

    /// Number of degrees of freedom carried by this quasi-interpolant.
    pub fn ndof(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[f64; R]) -> Result<f64> {
        eval_levels(&self.hierarchy, 0, &self.levels, x)
    }

    /// Plain-text dump of the active cells and the active functions.
    ///
    /// ```text
    /// # thbfit mesh v1 dim=R levels=M
    /// cell <level> <c_1..c_R> <lo_1..lo_R> <hi_1..hi_R>
    /// fn <level> <j_1..j_R> <lambda>
    /// ```
    pub fn write_mesh_dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let h = &self.hierarchy;
        writeln!(w, "# thbfit mesh v1 dim={R} levels={}", h.num_levels())?;
        writeln!(w, "# cell <level> <cell index x{R}> <lower corner x{R}> <upper corner x{R}>")?;
        writeln!(w, "# fn <level> <function index x{R}> <coefficient>")?;
        for level in 0..h.num_levels() {
            for c in h.active_cells(level) {
                let b = h.space(level).cell_box(c);
                write!(w, "cell {level}")?;
                for v in c.0 {
                    write!(w, " {v}")?;
                }
                for v in b.lo.iter().chain(&b.hi) {
                    write!(w, " {v:.17e}")?;
                }
                writeln!(w)?;
            }
        }
        for ((level, j), v) in &self.coeffs {
            write!(w, "fn {level}")?;
            for i in j.0 {
                write!(w, " {i}")?;
            }
            writeln!(w, " {v:.17e}")?;
        }
        Ok(())
    }
}

/// Expresses a level-0 spline in the THB basis of `h` by taking, for every
/// active function, its level-wise B-spline coefficient.
pub fn represent_in_thb<const R: usize>(s: &SplineCoeffs<R>, h: &DomainHierarchy<R>) -> Result<QuasiInterpolant<R>> {
    for j in s.keys() {
        h.base().check_index(j)?;
    }
    let active = h.active_set();
    let mut current: LevelCoeffs<R> = s.iter().map(|(j, v)| (*j, *v)).collect();
    let mut coeffs = BTreeMap::new();
    for level in 0..h.num_levels() {
        if level > 0 {
            current = push_down(h, level - 1, &current, false, |_| 0.0);
        }
        for j in &active.levels[level] {
            coeffs.insert((level, *j), current.get(j).copied().unwrap_or(0.0));
        }
    }
    QuasiInterpolant::new(h.clone(), coeffs)
}
