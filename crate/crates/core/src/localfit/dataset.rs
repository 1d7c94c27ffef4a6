use crate::error::{Error, Result};
use crate::splinecore::Aabb;

/// Scattered samples `(X_i, f_i)` with pairwise distinct locations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredDataset<const R: usize> {
    points: Vec<[f64; R]>,
    values: Vec<f64>,
}

impl<const R: usize> ScatteredDataset<R> {
    pub fn new(points: Vec<[f64; R]>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidDataset(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidDataset("no data points".into()));
        }
        if let Some(i) = (0..points.len()).find(|&i| !values[i].is_finite() || points[i].iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidDataset(format!("non-finite sample {i}")));
        }
        if let Some((a, b)) = find_duplicate(&points) {
            return Err(Error::InvalidDataset(format!("points {a} and {b} share a location")));
        }
        Ok(Self { points, values })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; R]] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, i: usize) -> &[f64; R] {
        &self.points[i]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn bounding_box(&self) -> Aabb<R> {
        let mut lo = [f64::INFINITY; R];
        let mut hi = [f64::NEG_INFINITY; R];
        for p in &self.points {
            for h in 0..R {
                lo[h] = lo[h].min(p[h]);
                hi[h] = hi[h].max(p[h]);
            }
        }
        Aabb { lo, hi }
    }

    /// Samples whose index satisfies `keep`, in the original order.
    pub fn subset(&self, mut keep: impl FnMut(usize) -> bool) -> Result<Self> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        Self::new(idx.iter().map(|&i| self.points[i]).collect(), idx.iter().map(|&i| self.values[i]).collect())
    }
}

/// First pair of bit-identical locations, if any (`-0.0` equals `0.0`).
pub fn find_duplicate<const R: usize>(points: &[[f64; R]]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    let key = |i: usize| points[i].map(|v| if v == 0.0 { 0.0 } else { v });
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        (0..R).map(|h| ka[h].total_cmp(&kb[h])).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    order.windows(2).find(|w| key(w[0]) == key(w[1])).map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

/// Uniform binning of the data over its bounding box. Queries re-check the
/// exact distance of every candidate, so results do not depend on bin size.
#[derive(Debug, Clone)]
pub struct SpatialIndex<const R: usize> {
    lo: [f64; R],
    size: [f64; R],
    counts: [usize; R],
    bins: Vec<Vec<usize>>,
}

impl<const R: usize> SpatialIndex<R> {
    pub fn new(data: &ScatteredDataset<R>, bin_size: [f64; R]) -> Self {
        let bb = data.bounding_box();
        let max_bins = 4 * data.len() + 16;
        let mut size = bin_size.map(|s| if s.is_finite() && s > 0.0 { s } else { 1.0 });
        let counts = loop {
            let counts: [usize; R] =
                std::array::from_fn(|h| (((bb.hi[h] - bb.lo[h]) / size[h]).floor() as usize + 1).max(1));
            if counts.iter().product::<usize>() <= max_bins {
                break counts;
            }
            size = size.map(|s| 2.0 * s);
        };
        let mut index = Self { lo: bb.lo, size, counts, bins: vec![Vec::new(); counts.iter().product()] };
        for (i, p) in data.points().iter().enumerate() {
            let b = index.flat(&index.bin_of(p));
            index.bins[b].push(i);
        }
        index
    }

    fn bin_coord(&self, h: usize, x: f64) -> usize {
        let b = ((x - self.lo[h]) / self.size[h]).floor();
        if b < 0.0 {
            0
        } else {
            (b as usize).min(self.counts[h] - 1)
        }
    }

    fn bin_of(&self, x: &[f64; R]) -> [usize; R] {
        std::array::from_fn(|h| self.bin_coord(h, x[h]))
    }

    fn flat(&self, b: &[usize; R]) -> usize {
        (0..R).fold(0, |acc, h| acc * self.counts[h] + b[h])
    }

    /// Indices `i` with `|X_i - center| <= radius`, ascending.
    pub fn ball(&self, data: &ScatteredDataset<R>, center: &[f64; R], radius: f64) -> Vec<usize> {
        let lo: [usize; R] = std::array::from_fn(|h| self.bin_coord(h, center[h] - radius));
        let hi: [usize; R] = std::array::from_fn(|h| self.bin_coord(h, center[h] + radius));
        let mut out = Vec::new();
        for b in crate::splinecore::index_product(std::array::from_fn(|h| lo[h]..hi[h] + 1)) {
            for &i in &self.bins[self.flat(&b)] {
                let p = data.point(i);
                let d2: f64 = (0..R).map(|h| (p[h] - center[h]).powi(2)).sum();
                if d2.sqrt() <= radius {
                    out.push(i);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(ScatteredDataset::<2>::new(vec![], vec![]).is_err());
        let d = ScatteredDataset::new(vec![[0.0, 1.0], [0.5, 0.5], [0.0, 1.0]], vec![1.0, 2.0, 3.0]);
        assert!(matches!(d, Err(Error::InvalidDataset(_))));
        assert_eq!(find_duplicate(&[[0.0], [-0.0]]), Some((0, 1)));
    }

    #[test]
    fn ball_matches_brute_force() {
        let pts: Vec<[f64; 2]> = (0..400).map(|i| [((i * 37) % 101) as f64 * 0.01, ((i * 53) % 97) as f64 * 0.01]).collect();
        let mut uniq = pts.clone();
        uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        uniq.dedup();
        let vals = vec![0.0; uniq.len()];
        let data = ScatteredDataset::new(uniq, vals).unwrap();
        let index = SpatialIndex::new(&data, [0.07, 0.07]);
        for (c, r) in [([0.5, 0.5], 0.2), ([0.0, 0.0], 0.05), ([1.5, -0.3], 0.9), ([0.3, 0.8], 0.0)] {
            let expect: Vec<usize> = (0..data.len())
                .filter(|&i| {
                    let p = data.point(i);
                    ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() <= r
                })
                .collect();
            assert_eq!(index.ball(&data, &c, r), expect);
        }
    }
}
