use std::collections::BTreeMap;
use std::ops::Range;

use super::knots::{KnotVector, LocalConversion, Refinement};
use super::poly::LocalPoly;
use crate::error::{Error, Result};

/// Identifies one tensor-product B-spline by its per-direction indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex<const R: usize>(pub [usize; R]);

/// Identifies one cell of a level's tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex<const R: usize>(pub [usize; R]);

impl<const R: usize> CellIndex<R> {
    pub fn parent(&self) -> Self {
        CellIndex(self.0.map(|c| c / 2))
    }

    /// The `2^R` dyadic children on the next level.
    pub fn children(&self) -> impl Iterator<Item = CellIndex<R>> + '_ {
        (0..1usize << R).map(move |bits| {
            CellIndex(std::array::from_fn(|h| 2 * self.0[h] + ((bits >> h) & 1)))
        })
    }

    pub fn first_child(&self) -> Self {
        CellIndex(self.0.map(|c| 2 * c))
    }
}

/// Axis-aligned closed box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<const R: usize> {
    pub lo: [f64; R],
    pub hi: [f64; R],
}

impl<const R: usize> Aabb<R> {
    pub fn new(lo: [f64; R], hi: [f64; R]) -> Self {
        Self { lo, hi }
    }

    pub fn center(&self) -> [f64; R] {
        std::array::from_fn(|h| 0.5 * (self.lo[h] + self.hi[h]))
    }

    /// Euclidean length of the diagonal.
    pub fn diameter(&self) -> f64 {
        (0..R).map(|h| (self.hi[h] - self.lo[h]).powi(2)).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        (0..R).map(|h| self.hi[h] - self.lo[h]).product()
    }

    pub fn contains(&self, x: &[f64; R]) -> bool {
        (0..R).all(|h| x[h] >= self.lo[h] && x[h] <= self.hi[h])
    }
}

/// Iterates the Cartesian product of per-direction index ranges in
/// lexicographic order (last direction fastest).
pub fn index_product<const R: usize>(ranges: [Range<usize>; R]) -> IndexProduct<R> {
    let done = ranges.iter().any(|r| r.is_empty());
    let next = ranges.clone().map(|r| r.start);
    IndexProduct { ranges, next, done }
}

pub struct IndexProduct<const R: usize> {
    ranges: [Range<usize>; R],
    next: [usize; R],
    done: bool,
}

impl<const R: usize> Iterator for IndexProduct<R> {
    type Item = [usize; R];

    fn next(&mut self) -> Option<[usize; R]> {
        if self.done {
            return None;
        }
        let out = self.next;
        let mut h = R;
        loop {
            if h == 0 {
                self.done = true;
                break;
            }
            h -= 1;
            self.next[h] += 1;
            if self.next[h] < self.ranges[h].end {
                break;
            }
            self.next[h] = self.ranges[h].start;
        }
        Some(out)
    }
}

/// One level's tensor-product B-spline space.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpace<const R: usize> {
    dirs: [KnotVector; R],
    level: usize,
}

impl<const R: usize> TensorSpace<R> {
    pub fn new(dirs: [KnotVector; R]) -> Result<Self> {
        if R == 0 {
            return Err(Error::InvalidKnots("zero-dimensional space".into()));
        }
        Ok(Self { dirs, level: 0 })
    }

    /// Uniform clamped space on `bounds` with `cells[h]` cells in direction `h`.
    pub fn uniform(bounds: Aabb<R>, cells: [usize; R], degrees: [usize; R]) -> Result<Self> {
        let dirs: Vec<KnotVector> = (0..R)
            .map(|h| KnotVector::uniform(bounds.lo[h], bounds.hi[h], cells[h], degrees[h]))
            .collect::<Result<_>>()?;
        Self::new(dirs.try_into().expect("R directions"))
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dir(&self, h: usize) -> &KnotVector {
        &self.dirs[h]
    }

    pub fn dirs(&self) -> &[KnotVector; R] {
        &self.dirs
    }

    pub fn degrees(&self) -> [usize; R] {
        std::array::from_fn(|h| self.dirs[h].degree())
    }

    pub fn min_degree(&self) -> usize {
        self.degrees().into_iter().min().unwrap_or(0)
    }

    pub fn num_basis(&self) -> [usize; R] {
        std::array::from_fn(|h| self.dirs[h].num_basis())
    }

    pub fn total_basis(&self) -> usize {
        self.num_basis().iter().product()
    }

    pub fn num_cells(&self) -> [usize; R] {
        std::array::from_fn(|h| self.dirs[h].num_cells())
    }

    pub fn bounds(&self) -> Aabb<R> {
        Aabb {
            lo: std::array::from_fn(|h| self.dirs[h].domain().0),
            hi: std::array::from_fn(|h| self.dirs[h].domain().1),
        }
    }

    pub fn indices(&self) -> IndexProduct<R> {
        index_product(self.num_basis().map(|n| 0..n))
    }

    pub fn cells(&self) -> IndexProduct<R> {
        index_product(self.num_cells().map(|n| 0..n))
    }

    pub fn check_index(&self, j: &MultiIndex<R>) -> Result<()> {
        for h in 0..R {
            let n = self.dirs[h].num_basis();
            if j.0[h] >= n {
                return Err(Error::IndexOutOfRange { index: j.0[h], len: n });
            }
        }
        Ok(())
    }

    /// Value of `B_J` at `x`: the product of its univariate factors.
    pub fn eval(&self, j: &MultiIndex<R>, x: &[f64; R]) -> Result<f64> {
        self.check_index(j)?;
        let mut v = 1.0;
        for h in 0..R {
            v *= self.dirs[h].eval(j.0[h], x[h])?;
        }
        Ok(v)
    }

    pub fn support_box(&self, j: &MultiIndex<R>) -> Aabb<R> {
        let s: [(f64, f64); R] = std::array::from_fn(|h| self.dirs[h].support(j.0[h]));
        Aabb { lo: s.map(|p| p.0), hi: s.map(|p| p.1) }
    }

    pub fn support_cells(&self, j: &MultiIndex<R>) -> [Range<usize>; R] {
        std::array::from_fn(|h| self.dirs[h].support_cells(j.0[h]))
    }

    /// Functions not vanishing on `cell`.
    pub fn cell_functions(&self, cell: &CellIndex<R>) -> [Range<usize>; R] {
        std::array::from_fn(|h| {
            let r = self.dirs[h].cell_functions(cell.0[h]);
            *r.start()..*r.end() + 1
        })
    }

    /// Functions whose closed support box contains `x`.
    pub fn functions_touching(&self, x: &[f64; R]) -> [Range<usize>; R] {
        std::array::from_fn(|h| self.dirs[h].functions_touching(x[h]))
    }

    pub fn cell_of(&self, x: &[f64; R]) -> Result<CellIndex<R>> {
        let mut c = [0; R];
        for h in 0..R {
            c[h] = self.dirs[h].cell_of(x[h])?;
        }
        Ok(CellIndex(c))
    }

    pub fn cell_box(&self, cell: &CellIndex<R>) -> Aabb<R> {
        let b: [(f64, f64); R] = std::array::from_fn(|h| self.dirs[h].cell_bounds(cell.0[h]));
        Aabb { lo: b.map(|p| p.0), hi: b.map(|p| p.1) }
    }

    /// Nonzero univariate factors at `x` restricted to `cell`; the result
    /// holds the first function index and `d_h + 1` values per direction.
    pub fn local_basis(&self, cell: &CellIndex<R>, x: &[f64; R]) -> [(usize, Vec<f64>); R] {
        std::array::from_fn(|h| {
            let kv = &self.dirs[h];
            let mut vals = vec![0.0; kv.degree() + 1];
            let first = kv.basis_values_in_span(kv.span_of_cell(cell.0[h]), x[h], &mut vals);
            (first, vals)
        })
    }

    /// Splits every cell at its midpoint in every direction.
    pub fn dyadic_refine(&self) -> Self {
        Self { dirs: std::array::from_fn(|h| self.dirs[h].dyadic_refine()), level: self.level + 1 }
    }

    pub fn refinement_to(&self, fine: &TensorSpace<R>) -> Result<[Refinement; R]> {
        let rows: Vec<Refinement> =
            (0..R).map(|h| self.dirs[h].refinement_to(&fine.dirs[h])).collect::<Result<_>>()?;
        Ok(rows.try_into().expect("R directions"))
    }

    /// Coefficients of the same spline in the basis of `fine`.
    pub fn two_scale(&self, fine: &TensorSpace<R>, coeffs: &SplineCoeffs<R>) -> Result<SplineCoeffs<R>> {
        let rel = self.refinement_to(fine)?;
        for j in coeffs.keys() {
            self.check_index(j)?;
        }
        let mut targets = std::collections::BTreeSet::new();
        for (j, _) in coeffs.iter() {
            let lists: [&[usize]; R] = std::array::from_fn(|h| rel[h].fine_of(j.0[h]));
            for pick in index_product(lists.map(|l| 0..l.len())) {
                targets.insert(MultiIndex(std::array::from_fn(|h| lists[h][pick[h]])));
            }
        }
        let mut out = SplineCoeffs::new();
        for fj in targets {
            out.insert(fj, apply_refinement(&rel, &fj, |i| coeffs.get(i)));
        }
        Ok(out)
    }

    /// Per-direction conversion functionals for polynomials living on `frame`.
    pub fn local_conversion(&self, frame: &Aabb<R>) -> Result<[LocalConversion; R]> {
        let conv: Vec<LocalConversion> = (0..R)
            .map(|h| self.dirs[h].local_conversion(frame.lo[h], frame.hi[h]))
            .collect::<Result<_>>()?;
        Ok(conv.try_into().expect("R directions"))
    }

    /// B-spline coefficients, for every function overlapping `frame`, of
    /// the spline that agrees with `poly` on `frame`.
    pub fn poly_to_coeffs(&self, poly: &LocalPoly<R>, frame: &Aabb<R>) -> Result<SplineCoeffs<R>> {
        let d = self.min_degree();
        if poly.degree() > d {
            return Err(Error::DegreeViolation { poly: poly.degree(), spline: d });
        }
        let conv = self.local_conversion(frame)?;
        let shape: [usize; R] = std::array::from_fn(|h| conv[h].len());
        let mut data: Vec<f64> = index_product(shape.map(|n| 0..n))
            .map(|g| poly.eval(&std::array::from_fn(|h| conv[h].points[g[h]])))
            .collect();
        for (h, c) in conv.iter().enumerate() {
            apply_along_axis(&mut data, &shape, h, &c.inverse);
        }
        let mut out = SplineCoeffs::new();
        for (g, v) in index_product(shape.map(|n| 0..n)).zip(data) {
            out.insert(MultiIndex(std::array::from_fn(|h| conv[h].first + g[h])), v);
        }
        Ok(out)
    }
}

/// Fine coefficient `fj` from coarse coefficients given by `coarse`.
pub(crate) fn apply_refinement<const R: usize>(
    rel: &[Refinement; R],
    fj: &MultiIndex<R>,
    coarse: impl Fn(&MultiIndex<R>) -> f64,
) -> f64 {
    let rows: [(usize, &[f64]); R] = std::array::from_fn(|h| rel[h].row(fj.0[h]));
    let mut acc = 0.0;
    for p in index_product(rows.map(|(_, w)| 0..w.len())) {
        let w: f64 = (0..R).map(|h| rows[h].1[p[h]]).product();
        if w != 0.0 {
            acc += w * coarse(&MultiIndex(std::array::from_fn(|h| rows[h].0 + p[h])));
        }
    }
    acc
}

/// Multiplies the tensor `data` (row-major, `shape`) by `mat` along `axis`.
fn apply_along_axis<const R: usize>(data: &mut [f64], shape: &[usize; R], axis: usize, mat: &[f64]) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![0.0; n];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for (k, l) in line.iter_mut().enumerate() {
                *l = data[base + k * inner];
            }
            for r in 0..n {
                data[base + r * inner] = (0..n).map(|k| mat[r * n + k] * line[k]).sum();
            }
        }
    }
}

/// Sparse coefficient vector of a tensor spline space; absent entries are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplineCoeffs<const R: usize> {
    map: BTreeMap<MultiIndex<R>, f64>,
}

impl<const R: usize> SplineCoeffs<R> {
    pub fn new() -> Self {
        Self { map: BTreeMap::new() }
    }

    /// One coefficient per function of `space`.
    pub fn dense(space: &TensorSpace<R>, mut value: impl FnMut(&MultiIndex<R>) -> f64) -> Self {
        let map = space.indices().map(MultiIndex).map(|j| (j, value(&j))).collect();
        Self { map }
    }

    pub fn insert(&mut self, j: MultiIndex<R>, v: f64) {
        self.map.insert(j, v);
    }

    pub fn get(&self, j: &MultiIndex<R>) -> f64 {
        self.map.get(j).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, j: &MultiIndex<R>) -> bool {
        self.map.contains_key(j)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex<R>, &f64)> {
        self.map.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&MultiIndex<R>, &mut f64)> {
        self.map.iter_mut()
    }

    pub fn keys(&self) -> impl Iterator<Item = &MultiIndex<R>> {
        self.map.keys()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.map.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Evaluates `sum_J c_J B_J(x)` over the stored coefficients.
    pub fn eval(&self, space: &TensorSpace<R>, x: &[f64; R]) -> Result<f64> {
        let cell = space.cell_of(x)?;
        let basis = space.local_basis(&cell, x);
        let mut acc = 0.0;
        for p in index_product(basis.each_ref().map(|(_, v)| 0..v.len())) {
            let j = MultiIndex(std::array::from_fn(|h| basis[h].0 + p[h]));
            if let Some(c) = self.map.get(&j) {
                acc += c * (0..R).map(|h| basis[h].1[p[h]]).product::<f64>();
            }
        }
        Ok(acc)
    }
}

impl<const R: usize> FromIterator<(MultiIndex<R>, f64)> for SplineCoeffs<R> {
    fn from_iter<I: IntoIterator<Item = (MultiIndex<R>, f64)>>(iter: I) -> Self {
        Self { map: iter.into_iter().collect() }
    }
}
