use std::collections::{BTreeSet, HashSet};
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::splinecore::{index_product, Aabb, CellIndex, MultiIndex, Refinement, TensorSpace};

/// Nested cell domains `Omega^0 ⊇ Omega^1 ⊇ ...` over a chain of dyadically
/// refined tensor spaces. `Omega^l` is stored as a set of level-`l` cells;
/// refining a cell inserts all of its children, so a level-`l` cell is
/// either fully refined or not at all.
#[derive(Debug, Clone)]
pub struct DomainHierarchy<const R: usize> {
    spaces: Vec<Arc<TensorSpace<R>>>,
    refinements: Vec<Arc<[Refinement; R]>>,
    omega: Vec<BTreeSet<CellIndex<R>>>,
}

/// Active cells per level.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalMesh<const R: usize> {
    pub levels: Vec<Vec<CellIndex<R>>>,
}

/// Active multi-indices per level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActiveSet<const R: usize> {
    pub levels: Vec<BTreeSet<MultiIndex<R>>>,
}

impl<const R: usize> ActiveSet<R> {
    pub fn contains(&self, level: usize, j: &MultiIndex<R>) -> bool {
        self.levels.get(level).is_some_and(|s| s.contains(j))
    }

    /// Number of hierarchical basis functions.
    pub fn count(&self) -> usize {
        self.levels.iter().map(BTreeSet::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &MultiIndex<R>)> {
        self.levels.iter().enumerate().flat_map(|(l, s)| s.iter().map(move |j| (l, j)))
    }
}

impl<const R: usize> DomainHierarchy<R> {
    /// Single-level hierarchy: `Omega^0` is the whole grid of `base`.
    pub fn new(base: TensorSpace<R>) -> Self {
        let omega0 = base.cells().map(CellIndex).collect();
        Self { spaces: vec![Arc::new(base)], refinements: Vec::new(), omega: vec![omega0] }
    }

    /// Hierarchy with `domains[k]` listing the cells of `Omega^{k+1}`.
    /// Trailing empty levels are dropped.
    pub fn from_domains(base: TensorSpace<R>, domains: Vec<Vec<CellIndex<R>>>) -> Result<Self> {
        let mut h = Self::new(base);
        for (k, cells) in domains.into_iter().enumerate() {
            let level = k + 1;
            h.ensure_level(level);
            let ncells = h.spaces[level].num_cells();
            for c in cells {
                if (0..R).any(|d| c.0[d] >= ncells[d]) {
                    return Err(Error::InvalidHierarchy(format!("cell {:?} outside level {level}", c.0)));
                }
                if !h.omega[level - 1].contains(&c.parent()) {
                    return Err(Error::NotNested(format!(
                        "cell {:?} of level {level} lies outside Omega^{}",
                        c.0,
                        level - 1
                    )));
                }
                h.omega[level].insert(c);
            }
        }
        for level in 1..h.omega.len() {
            for c in &h.omega[level] {
                if c.parent().children().any(|s| !h.omega[level].contains(&s)) {
                    return Err(Error::InvalidHierarchy(format!(
                        "level {level} holds a partial set of children of {:?}",
                        c.parent().0
                    )));
                }
            }
        }
        h.trim_empty();
        Ok(h)
    }

    fn ensure_level(&mut self, level: usize) {
        while self.spaces.len() <= level {
            let coarse = self.spaces.last().expect("base level");
            let fine = coarse.dyadic_refine();
            let rel = coarse.refinement_to(&fine).expect("dyadic refinement is nested");
            self.refinements.push(Arc::new(rel));
            self.spaces.push(Arc::new(fine));
            self.omega.push(BTreeSet::new());
        }
    }

    fn trim_empty(&mut self) {
        while self.omega.len() > 1 && self.omega.last().is_some_and(BTreeSet::is_empty) {
            self.omega.pop();
        }
    }

    /// Number of levels `M`.
    pub fn num_levels(&self) -> usize {
        self.omega.len()
    }

    pub fn space(&self, level: usize) -> &TensorSpace<R> {
        &self.spaces[level]
    }

    pub fn base(&self) -> &TensorSpace<R> {
        &self.spaces[0]
    }

    pub fn bounds(&self) -> Aabb<R> {
        self.spaces[0].bounds()
    }

    /// Two-scale relation from `level` to `level + 1`.
    pub fn refinement(&self, level: usize) -> &[Refinement; R] {
        &self.refinements[level]
    }

    pub fn omega(&self, level: usize) -> &BTreeSet<CellIndex<R>> {
        &self.omega[level]
    }

    pub fn in_omega(&self, level: usize, cell: &CellIndex<R>) -> bool {
        self.omega.get(level).is_some_and(|s| s.contains(cell))
    }

    pub fn is_refined(&self, level: usize, cell: &CellIndex<R>) -> bool {
        self.in_omega(level + 1, &cell.first_child())
    }

    pub fn is_active_cell(&self, level: usize, cell: &CellIndex<R>) -> bool {
        self.in_omega(level, cell) && !self.is_refined(level, cell)
    }

    pub fn active_cells(&self, level: usize) -> impl Iterator<Item = &CellIndex<R>> + '_ {
        self.omega[level].iter().filter(move |c| !self.is_refined(level, c))
    }

    pub fn mesh(&self) -> HierarchicalMesh<R> {
        HierarchicalMesh {
            levels: (0..self.num_levels()).map(|l| self.active_cells(l).copied().collect()).collect(),
        }
    }

    /// Whether every cell in `ranges` (level-`level` cell indices) satisfies `pred`.
    fn all_cells(&self, ranges: [Range<usize>; R], mut pred: impl FnMut(&CellIndex<R>) -> bool) -> bool {
        index_product(ranges).all(|c| pred(&CellIndex(c)))
    }

    /// `supp B_J^level ⊆ Omega^level`.
    pub fn support_in_domain(&self, level: usize, j: &MultiIndex<R>) -> bool {
        level == 0
            || (level < self.num_levels()
                && self.all_cells(self.spaces[level].support_cells(j), |c| self.omega[level].contains(c)))
    }

    /// `supp B_J^level ⊆ Omega^{level+1}`.
    pub fn support_refined(&self, level: usize, j: &MultiIndex<R>) -> bool {
        level + 1 < self.num_levels()
            && self.all_cells(self.spaces[level].support_cells(j), |c| self.is_refined(level, c))
    }

    pub fn is_active_function(&self, level: usize, j: &MultiIndex<R>) -> bool {
        level < self.num_levels()
            && self.spaces[level].check_index(j).is_ok()
            && self.support_in_domain(level, j)
            && !self.support_refined(level, j)
    }

    /// Functions of `level` whose support meets at least one cell of `Omega^level`.
    pub fn functions_touching_domain(&self, level: usize) -> HashSet<MultiIndex<R>> {
        let space = &self.spaces[level];
        let mut out = HashSet::new();
        for c in &self.omega[level] {
            for j in index_product(space.cell_functions(c)) {
                out.insert(MultiIndex(j));
            }
        }
        out
    }

    /// Active sets `A^l`: supports inside `Omega^l` but not inside `Omega^{l+1}`.
    pub fn active_set(&self) -> ActiveSet<R> {
        let levels = (0..self.num_levels())
            .map(|l| {
                let space = &self.spaces[l];
                let mut cand = BTreeSet::new();
                for c in self.active_cells(l) {
                    for j in index_product(space.cell_functions(c)) {
                        cand.insert(MultiIndex(j));
                    }
                }
                cand.into_iter().filter(|j| self.support_in_domain(l, j)).collect()
            })
            .collect();
        ActiveSet { levels }
    }

    /// Active cell containing `x`.
    pub fn locate(&self, x: &[f64; R]) -> Result<(usize, CellIndex<R>)> {
        let mut level = 0;
        let mut cell = self.spaces[0].cell_of(x)?;
        while self.is_refined(level, &cell) {
            level += 1;
            cell = self.spaces[level].cell_of(x)?;
        }
        Ok((level, cell))
    }

    /// New snapshot where each listed active cell is replaced by its children.
    pub fn refine_cells(&self, cells: &[(usize, CellIndex<R>)]) -> Result<Self> {
        let mut next = self.clone();
        for (level, cell) in cells {
            if !self.is_active_cell(*level, cell) {
                return Err(Error::InvalidHierarchy(format!(
                    "cell {:?} is not active on level {level}",
                    cell.0
                )));
            }
            next.ensure_level(level + 1);
            next.omega[level + 1].extend(cell.children());
        }
        next.trim_empty();
        Ok(next)
    }
}
