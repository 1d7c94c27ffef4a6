//! Small dense kernels for the local least squares problems: Householder QR
//! for the solves and one-sided Jacobi on the triangular factor for the
//! minimal singular value.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate().take(self.rows) {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j).powi(2)).sum::<f64>().sqrt()
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }
}

/// Householder triangularization of `a` (`m >= p`), applying the same
/// reflections to every vector in `rhs`. Returns the `p x p` factor `R`
/// in row-major order.
fn householder(a: &DenseMatrix, rhs: &mut [&mut [f64]]) -> Vec<f64> {
    let (m, p) = (a.rows, a.cols);
    let mut w = a.data.clone();
    let mut v = vec![0.0; m];
    for k in 0..p.min(m) {
        let norm = (k..m).map(|i| w[i * p + k].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let akk = w[k * p + k];
        let alpha = if akk >= 0.0 { -norm } else { norm };
        for i in k..m {
            v[i] = w[i * p + k];
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..m).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..p {
            let s = 2.0 * (k..m).map(|i| v[i] * w[i * p + j]).sum::<f64>() / vnorm2;
            for i in k..m {
                w[i * p + j] -= s * v[i];
            }
        }
        for b in rhs.iter_mut() {
            let s = 2.0 * (k..m).map(|i| v[i] * b[i]).sum::<f64>() / vnorm2;
            for i in k..m {
                b[i] -= s * v[i];
            }
        }
    }
    let mut r = vec![0.0; p * p];
    for i in 0..p.min(m) {
        for j in i..p {
            r[i * p + j] = w[i * p + j];
        }
    }
    r
}

/// Smallest singular value `min_{|x| = 1} |Ax|`; zero when `A` has more
/// columns than rows.
pub fn min_singular_value(a: &DenseMatrix) -> Result<f64> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    a.check_finite()?;
    if a.rows < a.cols {
        return Ok(0.0);
    }
    let p = a.cols;
    let mut g = householder(a, &mut []);
    jacobi_orthogonalize(&mut g, p, p);
    Ok((0..p)
        .map(|j| (0..p).map(|i| g[i * p + j].powi(2)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min))
}

/// One-sided Jacobi: rotates column pairs of the row-major `m x p` matrix
/// until all columns are mutually orthogonal to working precision.
fn jacobi_orthogonalize(g: &mut [f64], m: usize, p: usize) {
    const MAX_SWEEPS: usize = 80;
    let tol = f64::EPSILON * m as f64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..m {
                    let (gi, gj) = (g[k * p + i], g[k * p + j]);
                    alpha += gi * gi;
                    beta += gj * gj;
                    gamma += gi * gj;
                }
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let (gi, gj) = (g[k * p + i], g[k * p + j]);
                    g[k * p + i] = c * gi - s * gj;
                    g[k * p + j] = s * gi + c * gj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// Plain least squares minimizer of `|Ax - b|` via Householder QR.
pub fn lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, p) = (a.rows, a.cols);
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!("rhs has {} entries, matrix {m} rows", b.len())));
    }
    if m < p {
        return Err(Error::Underdetermined { rows: m, cols: p });
    }
    a.check_finite()?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut qtb = b.to_vec();
    let r = householder(a, &mut [&mut qtb]);
    let scale = a.frobenius_norm();
    let tiny = scale * f64::EPSILON * (m.max(p) as f64);
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let rii = r[i * p + i];
        if rii.abs() <= tiny || rii == 0.0 {
            return Err(Error::RankDeficient { column: i });
        }
        let s: f64 = (i + 1..p).map(|j| r[i * p + j] * x[j]).sum();
        x[i] = (qtb[i] - s) / rii;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ones_column() {
        let a = DenseMatrix::new(4, 1, vec![1.0; 4]).unwrap();
        assert_relative_eq!(min_singular_value(&a).unwrap(), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn identity() {
        let mut a = DenseMatrix::zeros(3, 3);
        (0..3).for_each(|i| a.set(i, i, 1.0));
        assert_relative_eq!(min_singular_value(&a).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn rank_deficient_is_tiny() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(min_singular_value(&a).unwrap() < 1e-14);
        assert!(matches!(lstsq(&a, &[1.0, 2.0, 3.0]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn wide_matrix_has_zero_msv() {
        let a = DenseMatrix::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(min_singular_value(&a).unwrap(), 0.0);
        assert!(matches!(lstsq(&a, &[1.0]), Err(Error::Underdetermined { rows: 1, cols: 3 })));
    }

    #[test]
    fn rejects_non_finite() {
        let a = DenseMatrix::new(2, 1, vec![1.0, f64::NAN]).unwrap();
        assert_eq!(min_singular_value(&a), Err(Error::NonFinite));
    }

    #[test]
    fn square_solve() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = lstsq(&a, &[3.0, 5.0]).unwrap();
        assert_relative_eq!(x[0], 0.8, max_relative = 1e-12);
        assert_relative_eq!(x[1], 1.4, max_relative = 1e-12);
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = c0 + c1 t at t = 0..4; normal equations solved by hand:
        // sum t = 10, sum t^2 = 30, sum y = 13, sum t y = 36
        // [5 10; 10 30] c = [13; 36] -> c1 = (5*36 - 10*13) / (150 - 100) = 1.0, c0 = 0.6
        let rows: Vec<Vec<f64>> = (0..5).map(|t| vec![1.0, t as f64]).collect();
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let y = [1.0, 1.0, 3.0, 3.0, 5.0];
        let c = lstsq(&a, &y).unwrap();
        assert_relative_eq!(c[0], 0.6, epsilon = 1e-10);
        assert_relative_eq!(c[1], 1.0, epsilon = 1e-10);
    }
}
