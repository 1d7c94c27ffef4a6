use std::ops::{Range, RangeInclusive};

use crate::error::{Error, Result};

/// Clamped (open) knot vector of a univariate B-spline space.
///
/// Cells are the nonempty intervals between consecutive distinct
/// breakpoints, numbered from 0 left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
    breaks: Vec<f64>,
    knot_cell: Vec<usize>,
    cell_span: Vec<usize>,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self> {
        let d = degree;
        if knots.len() < 2 * (d + 1) {
            return Err(Error::InvalidKnots(format!(
                "{} knots cannot carry degree {d} (need at least {})",
                knots.len(),
                2 * (d + 1)
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be non-decreasing".into()));
        }
        let n = knots.len();
        let (a, b) = (knots[0], knots[n - 1]);
        if a == b {
            return Err(Error::InvalidKnots("empty parameter domain".into()));
        }
        let first_mult = knots.iter().take_while(|&&k| k == a).count();
        let last_mult = knots.iter().rev().take_while(|&&k| k == b).count();
        if first_mult != d + 1 || last_mult != d + 1 {
            return Err(Error::InvalidKnots(format!(
                "end knots must have multiplicity exactly {} (found {first_mult} and {last_mult})",
                d + 1
            )));
        }

        let mut breaks = Vec::new();
        let mut knot_cell = Vec::with_capacity(n);
        let mut run = 0usize;
        for (j, &k) in knots.iter().enumerate() {
            if breaks.last() != Some(&k) {
                breaks.push(k);
                run = 0;
            }
            run += 1;
            if run > d + 1 {
                return Err(Error::InvalidKnots(format!(
                    "knot {k} at position {j} exceeds multiplicity {}",
                    d + 1
                )));
            }
            knot_cell.push(breaks.len() - 1);
        }
        let cells = breaks.len() - 1;
        let mut cell_span = vec![0; cells];
        for (j, &c) in knot_cell.iter().enumerate() {
            if c < cells {
                cell_span[c] = j;
            }
        }
        Ok(Self { knots, degree, breaks, knot_cell, cell_span })
    }

    /// Open knot vector over strictly increasing breakpoints.
    pub fn clamped(breakpoints: &[f64], degree: usize) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidKnots("need at least two breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKnots("breakpoints must be strictly increasing".into()));
        }
        let first = breakpoints[0];
        let last = breakpoints[breakpoints.len() - 1];
        let mut knots = vec![first; degree];
        knots.extend_from_slice(breakpoints);
        knots.extend(std::iter::repeat_n(last, degree));
        Self::new(knots, degree)
    }

    /// Open knot vector with `cells` equal cells on `[a, b]`.
    pub fn uniform(a: f64, b: f64, cells: usize, degree: usize) -> Result<Self> {
        if cells == 0 || !(b > a) {
            return Err(Error::InvalidKnots(format!("cannot split [{a}, {b}] into {cells} cells")));
        }
        let h = (b - a) / cells as f64;
        let mut breaks: Vec<f64> = (0..cells).map(|i| a + h * i as f64).collect();
        breaks.push(b);
        Self::clamped(&breaks, degree)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn num_cells(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        (self.breaks[cell], self.breaks[cell + 1])
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutsideDomain { value: t, lo, hi });
        }
        Ok(())
    }

    /// Cell containing `t`; right-continuous, the right end belongs to the last cell.
    pub fn cell_of(&self, t: f64) -> Result<usize> {
        self.check_domain(t)?;
        let cells = self.num_cells();
        let c = self.breaks.partition_point(|&x| x <= t);
        Ok(c.saturating_sub(1).min(cells - 1))
    }

    /// Cell containing `t` under the left-limit convention (the left end belongs to cell 0).
    pub fn cell_of_left(&self, t: f64) -> Result<usize> {
        self.check_domain(t)?;
        let c = self.breaks.partition_point(|&x| x < t);
        Ok(c.saturating_sub(1))
    }

    /// Knot span `mu` with `t_mu <= t < t_{mu+1}` (left limit at the right end).
    pub fn find_span(&self, t: f64) -> Result<usize> {
        Ok(self.cell_span[self.cell_of(t)?])
    }

    pub fn span_of_cell(&self, cell: usize) -> usize {
        self.cell_span[cell]
    }

    /// Functions that do not vanish on `cell`.
    pub fn cell_functions(&self, cell: usize) -> RangeInclusive<usize> {
        let mu = self.cell_span[cell];
        mu - self.degree..=mu
    }

    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.degree + 1])
    }

    /// Cells covered by the support of function `i`.
    pub fn support_cells(&self, i: usize) -> Range<usize> {
        self.knot_cell[i]..self.knot_cell[i + self.degree + 1]
    }

    /// Functions whose closed support contains `t`.
    pub fn functions_touching(&self, t: f64) -> Range<usize> {
        let d = self.degree;
        let n = self.num_basis();
        // supports are [t_i, t_{i+d+1}], both monotone in i
        let first = self.knots[d + 1..].partition_point(|&k| k < t);
        let end = self.knots[..n].partition_point(|&k| k <= t);
        first..end.max(first)
    }

    /// Triangular Cox-de Boor scheme on span `mu` where stage `k` uses
    /// argument `arg(k)`. With a constant argument it yields the `d+1`
    /// nonzero B-spline values; with distinct arguments it yields the
    /// blossoms used by knot insertion. `out[p]` refers to function `mu-d+p`.
    pub(crate) fn triangle(&self, mu: usize, arg: impl Fn(usize) -> f64, out: &mut [f64]) {
        let d = self.degree;
        let t = &self.knots;
        out[..=d].iter_mut().for_each(|v| *v = 0.0);
        out[d] = 1.0;
        for k in 1..=d {
            let x = arg(k);
            for p in (d + 1 - k)..=d {
                let i = mu + p - d;
                let v = out[p];
                let denom = t[i + k] - t[i];
                out[p - 1] += v * (t[i + k] - x) / denom;
                out[p] = v * (x - t[i]) / denom;
            }
        }
    }

    /// Nonzero basis values at `t`; returns the index of the first one.
    pub fn basis_values(&self, t: f64, out: &mut [f64]) -> Result<usize> {
        let mu = self.find_span(t)?;
        self.triangle(mu, |_| t, out);
        Ok(mu - self.degree)
    }

    pub(crate) fn basis_values_in_span(&self, mu: usize, t: f64, out: &mut [f64]) -> usize {
        self.triangle(mu, |_| t, out);
        mu - self.degree
    }

    /// Value of the `i`-th B-spline at `t`.
    pub fn eval(&self, i: usize, t: f64) -> Result<f64> {
        let n = self.num_basis();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        let mu = self.find_span(t)?;
        let d = self.degree;
        if i + d < mu || i > mu {
            return Ok(0.0);
        }
        let mut out = vec![0.0; d + 1];
        self.triangle(mu, |_| t, &mut out);
        Ok(out[i + d - mu])
    }

    pub fn greville(&self) -> Vec<f64> {
        let d = self.degree;
        (0..self.num_basis())
            .map(|i| {
                if d == 0 {
                    0.5 * (self.knots[i] + self.knots[i + 1])
                } else {
                    self.knots[i + 1..=i + d].iter().sum::<f64>() / d as f64
                }
            })
            .collect()
    }

    /// Splits every cell at its midpoint; existing knots are copied verbatim.
    pub fn dyadic_refine(&self) -> Self {
        let mut knots = Vec::with_capacity(self.knots.len() + self.num_cells());
        for (j, &k) in self.knots.iter().enumerate() {
            knots.push(k);
            let c = self.knot_cell[j];
            let last_of_run = self.knots.get(j + 1).is_none_or(|&next| next != k);
            if last_of_run && c < self.num_cells() {
                knots.push(0.5 * (self.breaks[c] + self.breaks[c + 1]));
            }
        }
        Self::new(knots, self.degree).expect("midpoint refinement keeps a valid knot vector")
    }

    /// Whether every knot of `self` (with multiplicity) also appears in `fine`.
    pub fn is_nested_in(&self, fine: &KnotVector) -> bool {
        if self.degree != fine.degree || self.domain() != fine.domain() {
            return false;
        }
        let mut j = 0;
        for &k in &self.knots {
            while j < fine.knots.len() && fine.knots[j] < k {
                j += 1;
            }
            if j == fine.knots.len() || fine.knots[j] != k {
                return false;
            }
            j += 1;
        }
        true
    }

    /// Knot-insertion matrix expressing each coarse B-spline in the fine basis.
    pub fn refinement_to(&self, fine: &KnotVector) -> Result<Refinement> {
        if !self.is_nested_in(fine) {
            return Err(Error::NotNested("fine knots do not contain the coarse knots".into()));
        }
        let d = self.degree;
        let tau = &fine.knots;
        let mut rows = Vec::with_capacity(fine.num_basis());
        let mut buf = vec![0.0; d + 1];
        for j in 0..fine.num_basis() {
            // any coarse span containing the first nonempty fine interval of B_j works
            let mu = self.find_span(tau[j])?;
            self.triangle(mu, |k| tau[j + k], &mut buf);
            rows.push((mu - d, buf.clone()));
        }
        let mut cols = vec![Vec::new(); self.num_basis()];
        for (j, (first, w)) in rows.iter().enumerate() {
            for (p, &v) in w.iter().enumerate() {
                if v != 0.0 {
                    cols[first + p].push(j);
                }
            }
        }
        Ok(Refinement { rows, cols })
    }

    /// Exact conversion of polynomials on `[a, b]` into this basis.
    ///
    /// The functions overlapping `(a, b)` restricted to the interval span the
    /// same space as the clamped knot vector `a^(d+1), interior knots, b^(d+1)`,
    /// so interpolation at the latter's Greville points is unisolvent.
    pub fn local_conversion(&self, a: f64, b: f64) -> Result<LocalConversion> {
        self.check_domain(a)?;
        self.check_domain(b)?;
        if !(b > a) {
            return Err(Error::InvalidKnots(format!("empty conversion interval [{a}, {b}]")));
        }
        let d = self.degree;
        let n_all = self.num_basis();
        let first = self.knots[d + 1..].partition_point(|&k| k <= a);
        let end = self.knots[..n_all].partition_point(|&k| k < b);
        let count = end - first;

        let mut local = vec![a; d + 1];
        local.extend(self.knots.iter().copied().filter(|&k| k > a && k < b));
        local.extend(std::iter::repeat_n(b, d + 1));
        let local = KnotVector::new(local, d)?;
        if local.num_basis() != count {
            return Err(Error::InvalidKnots(format!(
                "local space on [{a}, {b}] has {} functions but {count} overlap it",
                local.num_basis()
            )));
        }
        let points = local.greville();

        let mut colloc = vec![0.0; count * count];
        let mut buf = vec![0.0; d + 1];
        for (g, &x) in points.iter().enumerate() {
            // restrict to the interval: left limit at its right end
            let cell = if x >= b { self.cell_of_left(x)? } else { self.cell_of(x)? };
            let lo = self.basis_values_in_span(self.cell_span[cell], x, &mut buf);
            for (p, &v) in buf.iter().enumerate() {
                let i = lo + p;
                if i >= first && i < end {
                    colloc[g * count + (i - first)] = v;
                }
            }
        }
        let inverse = invert(&colloc, count).ok_or_else(|| {
            Error::InvalidKnots(format!("singular Greville collocation on [{a}, {b}]"))
        })?;
        Ok(LocalConversion { first, points, inverse })
    }
}

/// Sparse two-scale relation between a coarse and a fine knot vector.
#[derive(Debug, Clone)]
pub struct Refinement {
    rows: Vec<(usize, Vec<f64>)>,
    cols: Vec<Vec<usize>>,
}

impl Refinement {
    /// Coarse weights `(first index, weights)` for fine function `j`.
    pub fn row(&self, j: usize) -> (usize, &[f64]) {
        let (first, w) = &self.rows[j];
        (*first, w)
    }

    /// Fine functions receiving a contribution from coarse function `i`.
    pub fn fine_of(&self, i: usize) -> &[usize] {
        &self.cols[i]
    }

    pub fn weight(&self, j: usize, i: usize) -> f64 {
        let (first, w) = &self.rows[j];
        if i < *first || i >= first + w.len() {
            0.0
        } else {
            w[i - first]
        }
    }

    pub fn fine_len(&self) -> usize {
        self.rows.len()
    }
}

/// Interpolation functional taking polynomial values at `points` to
/// B-spline coefficients of the functions `first..first + points.len()`.
#[derive(Debug, Clone)]
pub struct LocalConversion {
    pub first: usize,
    pub points: Vec<f64>,
    /// row-major `n x n`; row `i` maps point values to coefficient `first + i`
    pub inverse: Vec<f64>,
}

impl LocalConversion {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weights_for(&self, i: usize) -> Option<&[f64]> {
        let n = self.len();
        (i >= self.first && i < self.first + n)
            .then(|| &self.inverse[(i - self.first) * n..(i - self.first + 1) * n])
    }
}

/// Gauss-Jordan inverse with partial pivoting of a small square matrix.
fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| m[r * n + col].abs().total_cmp(&m[s * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        m[r * n + k] -= f * m[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_zero_is_cell_indicator() {
        let kv = KnotVector::new(vec![0.0, 1.0], 0).unwrap();
        assert_eq!(kv.eval(0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn cardinal_quadratic_at_midpoint() {
        let kv = KnotVector::new(vec![0., 0., 0., 1., 2., 3., 3., 3.], 2).unwrap();
        assert_abs_diff_eq!(kv.eval(2, 1.5).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn zero_outside_support() {
        let kv = KnotVector::uniform(0.0, 6.0, 6, 3).unwrap();
        // function 0 lives on [0, 1]
        assert_eq!(kv.eval(0, 2.5).unwrap(), 0.0);
        assert_eq!(kv.eval(8, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn right_end_takes_left_limit() {
        let kv = KnotVector::uniform(0.0, 4.0, 4, 2).unwrap();
        let last = kv.num_basis() - 1;
        assert_eq!(kv.eval(last, 4.0).unwrap(), 1.0);
        assert_eq!(kv.eval(0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn right_continuous_at_interior_knot() {
        // degree 0: at t = 1 the second cell's function is on
        let kv = KnotVector::new(vec![0.0, 1.0, 2.0], 0).unwrap();
        assert_eq!(kv.eval(0, 1.0).unwrap(), 0.0);
        assert_eq!(kv.eval(1, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_errors() {
        let kv = KnotVector::uniform(0.0, 1.0, 2, 2).unwrap();
        assert!(matches!(kv.eval(9, 0.5), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(kv.eval(0, 1.5), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(KnotVector::new(vec![0., 0., 1., 1.], 2).is_err());
        assert!(KnotVector::new(vec![0., 0., 0., 2., 1., 3., 3., 3.], 2).is_err());
        // unclamped start
        assert!(KnotVector::new(vec![0., 0., 1., 2., 3., 3., 3.], 2).is_err());
        // interior multiplicity above d + 1
        assert!(KnotVector::new(vec![0., 0., 1., 1., 1., 2., 2.], 1).is_err());
    }

    #[test]
    fn dyadic_refine_uniform_and_graded() {
        let kv = KnotVector::new(vec![0., 0., 0., 1., 2., 2., 2.], 2).unwrap();
        assert_eq!(kv.dyadic_refine().knots(), &[0., 0., 0., 0.5, 1., 1.5, 2., 2., 2.]);
        let kv = KnotVector::new(vec![0., 0., 0., 1., 4., 4., 4.], 2).unwrap();
        let fine = kv.dyadic_refine();
        assert_eq!(fine.knots(), &[0., 0., 0., 0.5, 1., 2.5, 4., 4., 4.]);
        assert_eq!(fine.num_cells(), 2 * kv.num_cells());
        assert!(kv.is_nested_in(&fine));
    }

    #[test]
    fn greville_examples() {
        let kv = KnotVector::new(vec![0., 0., 1., 2., 2.], 1).unwrap();
        assert_eq!(kv.greville(), vec![0., 1., 2.]);
        let kv = KnotVector::new(vec![0., 0., 0., 1., 2., 2., 2.], 2).unwrap();
        assert_eq!(kv.greville(), vec![0., 0.5, 1.5, 2.]);
    }

    #[test]
    fn support_and_cell_functions_agree() {
        let kv = KnotVector::uniform(0.0, 5.0, 5, 2).unwrap();
        for c in 0..kv.num_cells() {
            for i in kv.cell_functions(c) {
                assert!(kv.support_cells(i).contains(&c));
            }
        }
        assert_eq!(kv.support_cells(0), 0..1);
        assert_eq!(kv.support_cells(3), 1..4);
        assert_eq!(kv.functions_touching(2.0), 1..5);
        assert_eq!(kv.functions_touching(0.0), 0..3);
    }

    #[test]
    fn local_conversion_reproduces_identity() {
        let kv = KnotVector::uniform(0.0, 6.0, 6, 2).unwrap();
        let (a, b) = kv.support(4);
        let conv = kv.local_conversion(a, b).unwrap();
        let g = kv.greville();
        for i in conv.first..conv.first + conv.len() {
            let w = conv.weights_for(i).unwrap();
            let c: f64 = w.iter().zip(&conv.points).map(|(w, x)| w * x).sum();
            assert_abs_diff_eq!(c, g[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn refinement_rejects_non_nested() {
        let a = KnotVector::uniform(0.0, 3.0, 3, 2).unwrap();
        let b = KnotVector::uniform(0.0, 3.0, 4, 2).unwrap();
        assert!(matches!(a.refinement_to(&b), Err(Error::NotNested(_))));
    }
}
