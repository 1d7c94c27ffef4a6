use crate::error::Result;
use crate::splinecore::{KnotVector, MultiIndex, TensorSpace};

/// Largest support half-diagonal per level, plus the coarser auxiliary
/// value used by the level-0 schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRadii {
    below_base: f64,
    levels: Vec<f64>,
}

/// Half-diagonal of the support box of `B_J`.
pub fn support_radius<const R: usize>(space: &TensorSpace<R>, j: &MultiIndex<R>) -> f64 {
    space.support_box(j).diameter() / 2.0
}

/// `max_J` of the support half-diagonal: supports are products, so the
/// maximum is reached by the longest support in every direction.
pub fn max_radius<const R: usize>(space: &TensorSpace<R>) -> f64 {
    (0..R).map(|h| longest_support(space.dir(h)).powi(2)).sum::<f64>().sqrt() / 2.0
}

fn longest_support(kv: &KnotVector) -> f64 {
    (0..kv.num_basis()).map(|i| kv.support(i)).map(|(a, b)| b - a).fold(0.0, f64::max)
}

/// Breakpoints of the auxiliary mesh: cells merged in pairs (an odd last
/// cell joins its neighbor), then a uniform split into `degree + 1` cells
/// if fewer remain.
pub fn auxiliary_breaks(breaks: &[f64], degree: usize) -> Vec<f64> {
    let n = breaks.len() - 1;
    let mut out: Vec<f64> = breaks.iter().step_by(2).copied().collect();
    if n % 2 == 1 {
        if out.len() > 1 {
            out.pop();
        }
        out.push(breaks[n]);
    }
    if out.len() - 1 < degree + 1 {
        let (a, b) = (breaks[0], breaks[n]);
        let m = degree + 1;
        out = (0..=m).map(|k| if k == m { b } else { a + (b - a) * k as f64 / m as f64 }).collect();
    }
    out
}

impl LevelRadii {
    pub fn new<const R: usize>(base: &TensorSpace<R>) -> Result<Self> {
        let dirs: Vec<KnotVector> = (0..R)
            .map(|h| {
                let kv = base.dir(h);
                KnotVector::clamped(&auxiliary_breaks(kv.breakpoints(), kv.degree()), kv.degree())
            })
            .collect::<Result<_>>()?;
        let aux = TensorSpace::<R>::new(dirs.try_into().expect("R directions"))?;
        Ok(Self { below_base: max_radius(&aux), levels: vec![max_radius(base)] })
    }

    /// Records the radius of `space` as the next level.
    pub fn push_level<const R: usize>(&mut self, space: &TensorSpace<R>) {
        self.levels.push(max_radius(space));
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Largest radius of `level`; `None` selects the auxiliary mesh.
    pub fn delta(&self, level: Option<usize>) -> f64 {
        match level {
            None => self.below_base,
            Some(l) => self.levels[l],
        }
    }

    /// Radius of the level below `level` (the auxiliary mesh for level 0).
    pub fn delta_below(&self, level: usize) -> f64 {
        self.delta(level.checked_sub(1))
    }
}

/// Number of ball enlargements allowed for a level-`level` function with
/// support radius `rho`: `ceil(2 * delta_below / rho) + 1`.
pub fn kj_schedule(level: usize, rho: f64, radii: &LevelRadii) -> usize {
    let ratio = 2.0 * radii.delta_below(level) / rho;
    // Exact integers computed from square roots may land an ulp above.
    let nearest = ratio.round();
    let ratio = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { ratio };
    ratio.ceil() as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splinecore::Aabb;

    #[test]
    fn auxiliary_breaks_merge_pairs() {
        assert_eq!(auxiliary_breaks(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2), vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(auxiliary_breaks(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 2), vec![0.0, 2.0, 4.0, 7.0]);
        assert_eq!(auxiliary_breaks(&[0.0, 1.0, 2.0, 3.0], 2), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(auxiliary_breaks(&[0.0, 1.0, 2.0, 3.0, 4.0], 2), vec![0.0, 4.0 / 3.0, 8.0 / 3.0, 4.0]);
    }

    #[test]
    fn schedule_examples() {
        let space = TensorSpace::uniform(Aabb::new([0.0, 0.0], [8.0, 8.0]), [8, 8], [2, 2]).unwrap();
        let radii = LevelRadii::new(&space).unwrap();
        let s2 = 2f64.sqrt();
        assert!((radii.delta(None) - 3.0 * s2).abs() < 1e-12);
        assert!((radii.delta(Some(0)) - 1.5 * s2).abs() < 1e-12);
        let rho = support_radius(&space, &MultiIndex([3, 3]));
        assert_eq!(kj_schedule(0, rho, &radii), 5);
        assert_eq!(kj_schedule(1, radii.delta(Some(0)), &radii), 3);
        assert_eq!(kj_schedule(1, 2.0 * radii.delta(Some(0)), &radii), 2);
    }
}
