//! Fitting domains: a box with axis-aligned boxes cut away.

use crate::error::{Error, Result};
use crate::splinecore::Aabb;

/// Relative width below which an uncovered piece of a box is ignored.
const SLIVER: f64 = 1e-9;

/// `base` minus the interiors of `cuts`. Points on a cut's boundary belong
/// to the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec<const R: usize> {
    base: Aabb<R>,
    cuts: Vec<Aabb<R>>,
}

fn overlap<const R: usize>(a: &Aabb<R>, b: &Aabb<R>) -> Option<Aabb<R>> {
    let lo: [f64; R] = std::array::from_fn(|h| a.lo[h].max(b.lo[h]));
    let hi: [f64; R] = std::array::from_fn(|h| a.hi[h].min(b.hi[h]));
    (0..R).all(|h| lo[h] < hi[h]).then_some(Aabb { lo, hi })
}

impl<const R: usize> DomainSpec<R> {
    pub fn new(base: Aabb<R>, cuts: Vec<Aabb<R>>) -> Result<Self> {
        if (0..R).any(|h| !(base.lo[h] < base.hi[h])) {
            return Err(Error::InvalidConfig("domain box must have positive extent".into()));
        }
        if let Some(c) = cuts.iter().find(|c| overlap(&base, c).is_none()) {
            return Err(Error::InvalidConfig(format!("cut {:?}..{:?} does not meet the domain box", c.lo, c.hi)));
        }
        let dom = Self { base, cuts };
        if !dom.meets(&base) {
            return Err(Error::InvalidConfig("cuts remove the whole domain".into()));
        }
        Ok(dom)
    }

    pub fn rectangle(base: Aabb<R>) -> Self {
        Self { base, cuts: Vec::new() }
    }

    pub fn base(&self) -> &Aabb<R> {
        &self.base
    }

    pub fn cuts(&self) -> &[Aabb<R>] {
        &self.cuts
    }

    pub fn contains(&self, x: &[f64; R]) -> bool {
        self.base.contains(x) && !self.cuts.iter().any(|c| (0..R).all(|h| c.lo[h] < x[h] && x[h] < c.hi[h]))
    }

    /// Whether `b` overlaps the domain in a set of positive measure.
    pub fn meets(&self, b: &Aabb<R>) -> bool {
        let Some(b) = overlap(&self.base, b) else {
            return false;
        };
        let relevant: Vec<Aabb<R>> = self.cuts.iter().filter_map(|c| overlap(&b, c)).collect();
        if relevant.is_empty() {
            return true;
        }
        // Cut edges split `b` into sub-boxes that are each either covered by
        // a cut or disjoint from all cut interiors; test their centers.
        let coords: [Vec<f64>; R] = std::array::from_fn(|h| {
            let mut v: Vec<f64> = [b.lo[h], b.hi[h]].into_iter().chain(relevant.iter().flat_map(|c| [c.lo[h], c.hi[h]])).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        });
        // Slivers from rounding in the box coordinates do not count.
        let tol: [f64; R] = std::array::from_fn(|h| SLIVER * (b.hi[h] - b.lo[h]));
        crate::splinecore::index_product(coords.each_ref().map(|v| 0..v.len() - 1)).any(|g| {
            let wide = (0..R).all(|h| coords[h][g[h] + 1] - coords[h][g[h]] > tol[h]);
            let mid: [f64; R] = std::array::from_fn(|h| 0.5 * (coords[h][g[h]] + coords[h][g[h] + 1]));
            wide && !relevant.iter().any(|c| c.contains(&mid))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_l() -> DomainSpec<2> {
        DomainSpec::new(Aabb::new([0.0, 0.0], [2.0, 2.0]), vec![Aabb::new([1.0, 1.0], [2.0, 2.0])]).unwrap()
    }

    #[test]
    fn contains_keeps_cut_boundary() {
        let d = unit_l();
        assert!(d.contains(&[1.0, 1.5]));
        assert!(!d.contains(&[1.5, 1.5]));
        assert!(d.contains(&[0.5, 1.5]));
        assert!(!d.contains(&[2.5, 0.0]));
    }

    #[test]
    fn meets_needs_positive_overlap() {
        let d = unit_l();
        assert!(!d.meets(&Aabb::new([1.0, 1.0], [2.0, 2.0])));
        assert!(d.meets(&Aabb::new([0.9, 1.0], [2.0, 2.0])));
        assert!(!d.meets(&Aabb::new([2.0, 0.0], [3.0, 1.0])));
        // covered jointly by two cuts
        let d = DomainSpec::new(
            Aabb::new([0.0, 0.0], [4.0, 4.0]),
            vec![Aabb::new([0.0, 0.0], [1.0, 2.0]), Aabb::new([1.0, 0.0], [2.0, 2.0])],
        )
        .unwrap();
        assert!(!d.meets(&Aabb::new([0.0, 0.0], [2.0, 2.0])));
        assert!(d.meets(&Aabb::new([0.0, 0.0], [2.0, 2.5])));
        assert!(!d.meets(&Aabb::new([0.0, 0.0], [2.0 + 1e-15, 2.0])));
    }

    #[test]
    fn rejects_degenerate_specs() {
        let base = Aabb::new([0.0, 0.0], [1.0, 1.0]);
        assert!(DomainSpec::new(base, vec![Aabb::new([2.0, 2.0], [3.0, 3.0])]).is_err());
        assert!(DomainSpec::new(base, vec![Aabb::new([-1.0, -1.0], [3.0, 3.0])]).is_err());
    }
}
