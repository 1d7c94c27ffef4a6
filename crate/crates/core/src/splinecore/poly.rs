use super::tensor::Aabb;

/// Exponents of all monomials of total degree `<= degree` in `R` variables,
/// graded lexicographic: by total degree, then descending in the first
/// variable, then the second, and so on.
pub fn monomials<const R: usize>(degree: usize) -> Vec<[usize; R]> {
    fn fill<const R: usize>(h: usize, left: usize, cur: &mut [usize; R], out: &mut Vec<[usize; R]>) {
        if h == R - 1 {
            cur[h] = left;
            out.push(*cur);
            return;
        }
        for e in (0..=left).rev() {
            cur[h] = e;
            fill(h + 1, left - e, cur, out);
        }
    }
    let mut out = Vec::new();
    if R == 0 {
        return out;
    }
    for t in 0..=degree {
        fill(0, t, &mut [0; R], &mut out);
    }
    out
}

/// Dimension of the space of `R`-variate polynomials of total degree `<= degree`.
pub fn poly_dim(r: usize, degree: usize) -> usize {
    // C(degree + r, r)
    (1..=r).fold(1usize, |acc, k| acc * (degree + k) / k)
}

/// Polynomial in the power basis of the reference coordinates
/// `u = (x - frame.lo) / (frame.hi - frame.lo)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPoly<const R: usize> {
    degree: usize,
    coeffs: Vec<f64>,
    frame: Aabb<R>,
}

impl<const R: usize> LocalPoly<R> {
    /// `coeffs` follow the order of [`monomials`].
    pub fn new(degree: usize, coeffs: Vec<f64>, frame: Aabb<R>) -> Self {
        assert_eq!(coeffs.len(), poly_dim(R, degree), "coefficient count must match the degree");
        Self { degree, coeffs, frame }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn frame(&self) -> &Aabb<R> {
        &self.frame
    }

    pub fn eval(&self, x: &[f64; R]) -> f64 {
        let u = to_reference(&self.frame, x);
        let pw = powers(&u, self.degree);
        monomials::<R>(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| c * (0..R).map(|h| pw[h][e[h]]).product::<f64>())
            .sum()
    }
}

pub fn to_reference<const R: usize>(frame: &Aabb<R>, x: &[f64; R]) -> [f64; R] {
    std::array::from_fn(|h| (x[h] - frame.lo[h]) / (frame.hi[h] - frame.lo[h]))
}

/// `pw[h][e] = u[h]^e` for `e <= degree`.
pub fn powers<const R: usize>(u: &[f64; R], degree: usize) -> [Vec<f64>; R] {
    std::array::from_fn(|h| {
        let mut v = Vec::with_capacity(degree + 1);
        let mut p = 1.0;
        for _ in 0..=degree {
            v.push(p);
            p *= u[h];
        }
        v
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        assert_eq!(
            monomials::<2>(2),
            vec![[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
        );
        assert_eq!(monomials::<1>(3), vec![[0], [1], [2], [3]]);
    }

    #[test]
    fn dimensions() {
        assert_eq!(poly_dim(2, 0), 1);
        assert_eq!(poly_dim(2, 2), 6);
        assert_eq!(poly_dim(2, 4), 15);
        assert_eq!(poly_dim(1, 3), 4);
        assert_eq!(poly_dim(3, 2), 10);
        for d in 0..6 {
            assert_eq!(monomials::<2>(d).len(), poly_dim(2, d));
            assert_eq!(monomials::<3>(d).len(), poly_dim(3, d));
        }
    }

    #[test]
    fn eval_in_reference_frame() {
        let frame = Aabb::new([2.0, -1.0], [4.0, 1.0]);
        // 1 + u + 2 v^2
        let p = LocalPoly::new(2, vec![1.0, 1.0, 0.0, 0.0, 0.0, 2.0], frame);
        let x = [3.0, 1.0]; // u = 0.5, v = 1
        assert!((p.eval(&x) - 3.5).abs() < 1e-15);
    }
}
