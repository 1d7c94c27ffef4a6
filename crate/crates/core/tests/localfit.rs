use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thbfit::densela::DenseMatrix;
use thbfit::localfit::{collocation, fit_lambda, select_degree, FitData, OscillationGuard, ScatteredDataset};
use thbfit::splinecore::{monomials, Aabb, LocalPoly, MultiIndex, TensorSpace};

fn eigen_msv(a: &DenseMatrix) -> f64 {
    let m = DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j));
    (m.transpose() * &m).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min).max(0.0).sqrt()
}

fn unit_square() -> Aabb<2> {
    Aabb::new([0.0, 0.0], [1.0, 1.0])
}

fn quad(x: &[f64; 2]) -> f64 {
    1.0 - 2.0 * x[0] + 0.5 * x[1] + 3.0 * x[0] * x[0] - x[0] * x[1] + 0.25 * x[1] * x[1]
}

#[test]
fn well_spread_quadratic_samples_keep_degree_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pts: Vec<[f64; 2]> = (0..20).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
    let vals = pts.iter().map(quad).collect();
    let ds = ScatteredDataset::new(pts, vals).unwrap();
    let idx: Vec<usize> = (0..20).collect();
    let c = select_degree(&ds, &idx, &unit_square(), 2, 0.05).unwrap();
    assert_eq!(c.degree, 2);
    let oracle = eigen_msv(&collocation(&ds, &idx, &unit_square(), 2));
    assert!(oracle >= 0.05);
    assert!((c.msv - oracle).abs() <= 1e-8 * oracle);
}

#[test]
fn collinear_samples_lower_the_degree_to_first_passing_gate() {
    let pts: Vec<[f64; 2]> = (0..15).map(|i| [i as f64 / 14.0, 0.3 + 0.4 * i as f64 / 14.0]).collect();
    let vals = pts.iter().map(quad).collect();
    let ds = ScatteredDataset::new(pts, vals).unwrap();
    let idx: Vec<usize> = (0..15).collect();
    let sigma = 1e-6;
    let expect = (0..=2usize)
        .rev()
        .find(|&t| t == 0 || eigen_msv(&collocation(&ds, &idx, &unit_square(), t)) >= sigma)
        .unwrap();
    let c = select_degree(&ds, &idx, &unit_square(), 2, sigma).unwrap();
    assert_eq!(c.degree, expect);
    assert!(c.degree <= 1);
}

fn dense_space() -> (TensorSpace<2>, FitData<2>, ChaCha8Rng) {
    let space = TensorSpace::uniform(Aabb::new([0.0, 0.0], [6.0, 6.0]), [6, 6], [2, 2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let pts: Vec<[f64; 2]> = (0..900).map(|_| [rng.gen_range(0.0..=6.0), rng.gen_range(0.0..=6.0)]).collect();
    let vals = pts.iter().map(quad).collect();
    let data = FitData::for_space(ScatteredDataset::new(pts, vals).unwrap(), &space);
    (space, data, rng)
}

#[test]
fn exact_polynomial_data_gives_exact_coefficients() {
    let (space, data, _) = dense_space();
    // quad in reference coordinates of the whole domain: x = 6u
    let frame = space.bounds();
    let poly = LocalPoly::new(2, vec![1.0, -12.0, 3.0, 108.0, -36.0, 9.0], frame);
    let exact = space.poly_to_coeffs(&poly, &frame).unwrap();
    for j in space.indices().map(MultiIndex) {
        let r = fit_lambda(&space, &j, &data, 1e-6, 5, None).unwrap();
        assert_eq!(r.degree, 2);
        assert!((r.lambda - exact.get(&j)).abs() <= 1e-9, "{j:?}: {} vs {}", r.lambda, exact.get(&j));
        assert!(r.sample_count >= monomials::<2>(2).len());
        assert_eq!(r.enlargement, 1);
    }
}

#[test]
fn guard_reduces_degree_for_extrapolating_fits() {
    let space = TensorSpace::uniform(Aabb::new([0.0, 0.0], [6.0, 6.0]), [6, 6], [2, 2]).unwrap();
    let j = MultiIndex([3, 3]);
    let frame = space.support_box(&j);
    // a tight cluster near the support center sampling a steep bowl
    let pts: Vec<[f64; 2]> = (0..25).map(|i| [2.4 + 0.05 * (i % 5) as f64, 2.4 + 0.05 * (i / 5) as f64]).collect();
    let vals: Vec<f64> = pts.iter().map(|p| 25.0 * ((p[0] - 2.5).powi(2) + (p[1] - 2.5).powi(2))).collect();
    let data = FitData::for_space(ScatteredDataset::new(pts, vals.clone()).unwrap(), &space);
    let plain = fit_lambda(&space, &j, &data, 1e-10, 3, None).unwrap();
    assert_eq!(plain.degree, 2);
    let guard = OscillationGuard { tau: 0.5 };
    assert!(!guard.accepts(&plain.poly, &frame, &vals));
    let guarded = fit_lambda(&space, &j, &data, 1e-10, 3, Some(&guard)).unwrap();
    assert!(guarded.degree < 2);
    assert!(guarded.degree == 0 || guard.accepts(&guarded.poly, &frame, &vals));
}

#[test]
fn frame_is_translation_invariant() {
    let (space, data, _) = dense_space();
    let shift = [1000.25, -37.5];
    let moved = TensorSpace::uniform(Aabb::new(shift, [6.0 + shift[0], 6.0 + shift[1]]), [6, 6], [2, 2]).unwrap();
    let ds = data.dataset();
    let pts = ds.points().iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
    let moved_data = FitData::for_space(ScatteredDataset::new(pts, ds.values().to_vec()).unwrap(), &moved);
    for j in space.indices().map(MultiIndex) {
        let a = fit_lambda(&space, &j, &data, 1e-6, 5, None).unwrap();
        let b = fit_lambda(&moved, &j, &moved_data, 1e-6, 5, None).unwrap();
        assert_eq!(a.degree, b.degree);
        assert!((a.msv - b.msv).abs() <= 1e-10);
    }
}

fn adversarial(kind: u8, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        0 => vec![[rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)]],
        1 => {
            let (a, b) = ([rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)], [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            (0..n).map(|i| [a[0] + b[0] * i as f64 / n as f64, a[1] + b[1] * i as f64 / n as f64]).collect()
        }
        _ => {
            let c = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let r = 10f64.powf(rng.gen_range(-9.0..-1.0));
            (0..n).map(|_| [c[0] + r * rng.gen_range(-1.0..1.0), c[1] + r * rng.gen_range(-1.0..1.0)]).collect()
        }
    }
}

proptest! {
    #[test]
    fn gate_always_holds(kind in 0u8..3, n in 2usize..30, seed in any::<u64>(), sigma in 1e-9f64..=1.0, d in 0usize..=4) {
        let mut pts = adversarial(kind, n, seed);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let ds = ScatteredDataset::new(pts.clone(), vec![0.0; pts.len()]).unwrap();
        let idx: Vec<usize> = (0..pts.len()).collect();
        let c = select_degree(&ds, &idx, &unit_square(), d, sigma).unwrap();
        prop_assert!(c.msv >= sigma);
        prop_assert!(c.degree <= d);
        if pts.len() == 1 {
            prop_assert_eq!(c.degree, 0);
            prop_assert_eq!(c.msv, 1.0);
        }
    }
}
