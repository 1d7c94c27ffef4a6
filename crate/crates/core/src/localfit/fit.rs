use super::dataset::{ScatteredDataset, SpatialIndex};
use crate::densela::{lstsq, min_singular_value, DenseMatrix};
use crate::error::{Error, Result};
use crate::splinecore::{index_product, monomials, poly_dim, powers, to_reference, Aabb, LocalPoly, MultiIndex, TensorSpace};

/// Dataset plus its read-only spatial index.
#[derive(Debug, Clone)]
pub struct FitData<const R: usize> {
    dataset: ScatteredDataset<R>,
    index: SpatialIndex<R>,
}

impl<const R: usize> FitData<R> {
    pub fn new(dataset: ScatteredDataset<R>, bin_size: [f64; R]) -> Self {
        let index = SpatialIndex::new(&dataset, bin_size);
        Self { dataset, index }
    }

    /// Bins sized like the cells of `space` (averaged per direction).
    pub fn for_space(dataset: ScatteredDataset<R>, space: &TensorSpace<R>) -> Self {
        let b = space.bounds();
        let cells = space.num_cells();
        Self::new(dataset, std::array::from_fn(|h| (b.hi[h] - b.lo[h]) / cells[h] as f64))
    }

    pub fn dataset(&self) -> &ScatteredDataset<R> {
        &self.dataset
    }

    /// Indices of the samples in the closed ball, ascending.
    pub fn ball(&self, center: &[f64; R], radius: f64) -> Vec<usize> {
        self.index.ball(&self.dataset, center, radius)
    }
}

/// Rejects a fitted polynomial whose values on a local grid stray too far
/// from the range of the local data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationGuard {
    /// Allowed excursion beyond `[min, max]` as a fraction of `max - min`.
    pub tau: f64,
}

impl Default for OscillationGuard {
    fn default() -> Self {
        Self { tau: 0.5 }
    }
}

impl OscillationGuard {
    /// Whether `poly` stays within the guarded range on a grid of
    /// `degree + 2` equispaced points per direction over `frame`.
    pub fn accepts<const R: usize>(&self, poly: &LocalPoly<R>, frame: &Aabb<R>, values: &[f64]) -> bool {
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let range = hi - lo;
        let slack = 1e-12 * lo.abs().max(hi.abs());
        let (min, max) = (lo - self.tau * range - slack, hi + self.tau * range + slack);
        let n = poly.degree() + 2;
        index_product([(); R].map(|_| 0..n)).all(|g| {
            let x = std::array::from_fn(|h| frame.lo[h] + (frame.hi[h] - frame.lo[h]) * g[h] as f64 / (n - 1) as f64);
            let v = poly.eval(&x);
            v >= min && v <= max
        })
    }
}

/// Outcome of the local fit for one B-spline.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFitResult<const R: usize> {
    pub lambda: f64,
    pub degree: usize,
    pub poly: LocalPoly<R>,
    pub sample_count: usize,
    /// Ball enlargement factor that produced the samples.
    pub enlargement: usize,
    pub msv: f64,
}

/// Center and half-diagonal of the support box of `B_J`.
pub fn local_ball<const R: usize>(space: &TensorSpace<R>, j: &MultiIndex<R>) -> ([f64; R], f64) {
    let b = space.support_box(j);
    (b.center(), b.diameter() / 2.0)
}

/// Samples in the first nonempty ball of radius `k * radius`, `k = 1..=max_k`.
pub fn gather<const R: usize>(
    data: &FitData<R>,
    center: &[f64; R],
    radius: f64,
    max_k: usize,
) -> Result<(Vec<usize>, usize)> {
    if max_k == 0 {
        return Err(Error::InvalidConfig("enlargement bound must be at least 1".into()));
    }
    for k in 1..=max_k {
        let found = data.ball(center, k as f64 * radius);
        if !found.is_empty() {
            return Ok((found, k));
        }
    }
    Err(Error::EmptyNeighborhood { enlargements: max_k })
}

/// Collocation matrix of all monomials of total degree `<= degree` in the
/// reference frame, one row per sample. Columns follow [`monomials`], so
/// lower degrees are column prefixes.
pub fn collocation<const R: usize>(data: &ScatteredDataset<R>, samples: &[usize], frame: &Aabb<R>, degree: usize) -> DenseMatrix {
    let exps = monomials::<R>(degree);
    let mut a = DenseMatrix::zeros(samples.len(), exps.len());
    for (row, &i) in samples.iter().enumerate() {
        let pw = powers(&to_reference(frame, data.point(i)), degree);
        for (col, e) in exps.iter().enumerate() {
            a.set(row, col, (0..R).map(|h| pw[h][e[h]]).product());
        }
    }
    a
}

fn leading_columns(a: &DenseMatrix, cols: usize) -> DenseMatrix {
    let data = (0..a.rows()).flat_map(|i| a.row(i)[..cols].iter().copied()).collect();
    DenseMatrix::new(a.rows(), cols, data).expect("shape is consistent")
}

/// Degree chosen by the singular-value gate together with its collocation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeChoice {
    pub degree: usize,
    pub matrix: DenseMatrix,
    pub msv: f64,
}

/// Tries degrees `start, start-1, ..., 0` and yields, in that order, every
/// degree with enough samples and minimal singular value `>= sigma`.
fn gated_degrees<const R: usize>(
    full: &DenseMatrix,
    start: usize,
    sigma: f64,
) -> impl Iterator<Item = Result<DegreeChoice>> + '_ {
    (0..=start).rev().filter_map(move |t| {
        let dim = poly_dim(R, t);
        if full.rows() < dim {
            return None;
        }
        let m = leading_columns(full, dim);
        match min_singular_value(&m) {
            Ok(msv) if t == 0 || msv >= sigma => Some(Ok(DegreeChoice { degree: t, matrix: m, msv })),
            Ok(_) => None,
            Err(e) => Some(Err(e)),
        }
    })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("singular value threshold {sigma} must lie in (0, 1]")))
    }
}

/// Largest total degree `<= max_degree` whose collocation matrix passes the gate.
pub fn select_degree<const R: usize>(
    data: &ScatteredDataset<R>,
    samples: &[usize],
    frame: &Aabb<R>,
    max_degree: usize,
    sigma: f64,
) -> Result<DegreeChoice> {
    check_sigma(sigma)?;
    if samples.is_empty() {
        return Err(Error::EmptyNeighborhood { enlargements: 0 });
    }
    let full = collocation(data, samples, frame, max_degree);
    let choice = gated_degrees::<R>(&full, max_degree, sigma).next().expect("degree 0 always passes");
    choice
}

/// Coefficient `lambda_J` of `B_J` from a local polynomial least-squares fit.
pub fn fit_lambda<const R: usize>(
    space: &TensorSpace<R>,
    j: &MultiIndex<R>,
    data: &FitData<R>,
    sigma: f64,
    max_k: usize,
    guard: Option<&OscillationGuard>,
) -> Result<LocalFitResult<R>> {
    check_sigma(sigma)?;
    space.check_index(j)?;
    let (center, radius) = local_ball(space, j);
    let (samples, k) = gather(data, &center, radius, max_k)?;
    let frame = space.support_box(j);
    let ds = data.dataset();
    let values: Vec<f64> = samples.iter().map(|&i| ds.value(i)).collect();
    let max_degree = space.min_degree();
    let full = collocation(ds, &samples, &frame, max_degree);

    let mut chosen = None;
    for choice in gated_degrees::<R>(&full, max_degree, sigma) {
        let choice = choice?;
        let coeffs = lstsq(&choice.matrix, &values)?;
        let poly = LocalPoly::new(choice.degree, coeffs, frame);
        let accepted = choice.degree == 0 || guard.is_none_or(|g| g.accepts(&poly, &frame, &values));
        if accepted {
            chosen = Some((choice, poly));
            break;
        }
    }
    let (choice, poly) = chosen.expect("degree 0 is always accepted");
    let lambda = convert_at(space, j, &poly, &frame)?;
    Ok(LocalFitResult { lambda, degree: choice.degree, poly, sample_count: samples.len(), enlargement: k, msv: choice.msv })
}

/// B-spline coefficient of `B_J` for the spline equal to `poly` on `frame`.
fn convert_at<const R: usize>(space: &TensorSpace<R>, j: &MultiIndex<R>, poly: &LocalPoly<R>, frame: &Aabb<R>) -> Result<f64> {
    let conv = space.local_conversion(frame)?;
    let w: Vec<&[f64]> = (0..R)
        .map(|h| conv[h].weights_for(j.0[h]).ok_or(Error::IndexOutOfRange { index: j.0[h], len: conv[h].len() }))
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    for g in index_product::<R>(std::array::from_fn(|h| 0..conv[h].len())) {
        let weight: f64 = (0..R).map(|h| w[h][g[h]]).product();
        if weight != 0.0 {
            acc += weight * poly.eval(&std::array::from_fn(|h| conv[h].points[g[h]]));
        }
    }
    Ok(acc)
}
