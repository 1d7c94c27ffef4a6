use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thbfit::splinecore::{monomials, Aabb, KnotVector, LocalPoly, MultiIndex, SplineCoeffs, TensorSpace};

/// Textbook recursive Cox-de Boor definition with `0/0 = 0`.
fn cox_de_boor(t: &[f64], i: usize, d: usize, x: f64) -> f64 {
    if d == 0 {
        return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    if t[i + d] > t[i] {
        v += (x - t[i]) / (t[i + d] - t[i]) * cox_de_boor(t, i, d - 1, x);
    }
    if t[i + d + 1] > t[i + 1] {
        v += (t[i + d + 1] - x) / (t[i + d + 1] - t[i + 1]) * cox_de_boor(t, i + 1, d - 1, x);
    }
    v
}

/// Single-knot insertion (Boehm); returns the new knots and coefficients.
fn boehm_insert(t: &[f64], c: &[f64], d: usize, u: f64) -> (Vec<f64>, Vec<f64>) {
    let k = (0..t.len() - 1).rfind(|&k| t[k] <= u && u < t[k + 1]).expect("interior knot");
    let mut out = Vec::with_capacity(c.len() + 1);
    for i in 0..=c.len() {
        let v = if i + d <= k {
            c[i]
        } else if i > k {
            c[i - 1]
        } else {
            let a = (u - t[i]) / (t[i + d] - t[i]);
            (1.0 - a) * c[i - 1] + a * c[i]
        };
        out.push(v);
    }
    let mut nt = t.to_vec();
    nt.insert(k + 1, u);
    (nt, out)
}

/// Inserts every knot of `fine` missing from `coarse`, one at a time.
fn boehm_refine(coarse: &KnotVector, fine: &KnotVector, c: &[f64]) -> Vec<f64> {
    let mut t = coarse.knots().to_vec();
    let mut c = c.to_vec();
    for &u in fine.knots() {
        let have = t.iter().filter(|&&v| v == u).count();
        let want = fine.knots().iter().filter(|&&v| v == u).count();
        for _ in have..want {
            (t, c) = boehm_insert(&t, &c, coarse.degree(), u);
        }
    }
    assert_eq!(t, fine.knots());
    c
}

fn random_breaks(rng: &mut ChaCha8Rng, cells: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    for _ in 0..cells {
        let last = *b.last().unwrap();
        b.push(last + rng.gen_range(0.2..2.0));
    }
    b
}

#[test]
fn univariate_eval_matches_recursive_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in 0..5 {
        let kv = KnotVector::clamped(&random_breaks(&mut rng, 7), d).unwrap();
        let (a, b) = kv.domain();
        for _ in 0..200 {
            let x = rng.gen_range(a..b);
            for i in 0..kv.num_basis() {
                assert_abs_diff_eq!(kv.eval(i, x).unwrap(), cox_de_boor(kv.knots(), i, d, x), epsilon = 1e-13);
            }
        }
    }
}

#[test]
fn tensor_eval_is_product_of_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let space = TensorSpace::new([
        KnotVector::clamped(&random_breaks(&mut rng, 6), 2).unwrap(),
        KnotVector::clamped(&random_breaks(&mut rng, 5), 3).unwrap(),
    ])
    .unwrap();
    let b = space.bounds();
    for _ in 0..3 {
        let j = MultiIndex([rng.gen_range(0..space.num_basis()[0]), rng.gen_range(0..space.num_basis()[1])]);
        let s = space.support_box(&j);
        let x = [rng.gen_range(s.lo[0]..s.hi[0]), rng.gen_range(s.lo[1]..s.hi[1])];
        let expect = cox_de_boor(space.dir(0).knots(), j.0[0], 2, x[0]) * cox_de_boor(space.dir(1).knots(), j.0[1], 3, x[1]);
        assert_abs_diff_eq!(space.eval(&j, &x).unwrap(), expect, epsilon = 1e-14);
        assert!(b.contains(&x));
    }
}

#[test]
fn cardinal_quadratic_two_scale_weights() {
    let coarse = KnotVector::uniform(0.0, 6.0, 6, 2).unwrap();
    let fine = coarse.dyadic_refine();
    let mut c = vec![0.0; coarse.num_basis()];
    c[3] = 1.0;
    let oracle = boehm_refine(&coarse, &fine, &c);
    let nonzero: Vec<f64> = oracle.iter().copied().filter(|v| v.abs() > 1e-15).collect();
    assert_eq!(nonzero, vec![0.25, 0.75, 0.75, 0.25]);

    let s0 = TensorSpace::new([coarse.clone()]).unwrap();
    let s1 = s0.dyadic_refine();
    let coeffs: SplineCoeffs<1> = [(MultiIndex([3]), 1.0)].into_iter().collect();
    let f = s0.two_scale(&s1, &coeffs).unwrap();
    for (i, v) in oracle.iter().enumerate() {
        assert_abs_diff_eq!(f.get(&MultiIndex([i])), *v, epsilon = 1e-15);
    }
}

#[test]
fn two_scale_matches_knot_insertion() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in 0..5 {
        let coarse = KnotVector::clamped(&random_breaks(&mut rng, 5 + d), d).unwrap();
        let fine = coarse.dyadic_refine();
        let c: Vec<f64> = (0..coarse.num_basis()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let oracle = boehm_refine(&coarse, &fine, &c);
        let s0 = TensorSpace::new([coarse]).unwrap();
        let s1 = s0.dyadic_refine();
        let coeffs: SplineCoeffs<1> = c.iter().enumerate().map(|(i, v)| (MultiIndex([i]), *v)).collect();
        let f = s0.two_scale(&s1, &coeffs).unwrap();
        for (i, v) in oracle.iter().enumerate() {
            assert_abs_diff_eq!(f.get(&MultiIndex([i])), *v, epsilon = 1e-13);
        }
    }
}

#[test]
fn refinement_preserves_function_at_10k_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let space = TensorSpace::new([
        KnotVector::clamped(&random_breaks(&mut rng, 7), 3).unwrap(),
        KnotVector::clamped(&random_breaks(&mut rng, 6), 2).unwrap(),
    ])
    .unwrap();
    let fine = space.dyadic_refine().dyadic_refine();
    let c = SplineCoeffs::dense(&space, |_| rng.gen_range(-5.0..5.0));
    let mid = space.dyadic_refine();
    let f = mid.two_scale(&fine, &space.two_scale(&mid, &c).unwrap()).unwrap();
    let b = space.bounds();
    for _ in 0..10_000 {
        let x = [rng.gen_range(b.lo[0]..=b.hi[0]), rng.gen_range(b.lo[1]..=b.hi[1])];
        let diff = (c.eval(&space, &x).unwrap() - f.eval(&fine, &x).unwrap()).abs();
        assert!(diff <= 1e-12 * c.max_abs(), "{diff}");
    }
    assert_eq!(fine.level(), 2);
    assert!(space.dir(0).is_nested_in(fine.dir(0)));
}

#[test]
fn identity_converts_to_greville_abscissae() {
    let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 1.0, 2.0, 4.0, 4.0, 4.0], 2).unwrap();
    let space = TensorSpace::new([kv.clone()]).unwrap();
    let frame = space.bounds();
    // x = lo + (hi - lo) u with u the reference coordinate
    let p = LocalPoly::new(1, vec![0.0, 4.0], frame);
    let c = space.poly_to_coeffs(&p, &frame).unwrap();
    for (i, g) in kv.greville().iter().enumerate() {
        assert_abs_diff_eq!(c.get(&MultiIndex([i])), *g, epsilon = 1e-13);
    }
}

#[test]
fn polynomial_conversion_is_exact_on_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let space = TensorSpace::new([
        KnotVector::clamped(&random_breaks(&mut rng, 8), 3).unwrap(),
        KnotVector::clamped(&random_breaks(&mut rng, 8), 3).unwrap(),
    ])
    .unwrap();
    for degree in 0..=3 {
        for _ in 0..5 {
            let j = MultiIndex([rng.gen_range(0..space.num_basis()[0]), rng.gen_range(0..space.num_basis()[1])]);
            let frame = space.support_box(&j);
            let coeffs = (0..monomials::<2>(degree).len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = LocalPoly::new(degree, coeffs, frame);
            let s = space.poly_to_coeffs(&p, &frame).unwrap();
            let pts: Vec<[f64; 2]> = (0..1000)
                .map(|_| [rng.gen_range(frame.lo[0]..=frame.hi[0]), rng.gen_range(frame.lo[1]..=frame.hi[1])])
                .collect();
            let norm = pts.iter().map(|x| p.eval(x).abs()).fold(0.0, f64::max);
            for x in &pts {
                let diff = (s.eval(&space, x).unwrap() - p.eval(x)).abs();
                assert!(diff <= 1e-10 * norm.max(1e-300), "degree {degree}: {diff}");
            }
        }
    }
}

#[test]
fn conversion_rejects_excess_degree() {
    let space = TensorSpace::uniform(Aabb::new([0.0, 0.0], [3.0, 3.0]), [3, 3], [1, 2]).unwrap();
    let frame = space.bounds();
    let p = LocalPoly::new(2, vec![0.0; 6], frame);
    assert!(space.poly_to_coeffs(&p, &frame).is_err());
}

fn knot_strategy() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (prop::collection::vec(0.05f64..3.0, 4..10), 0usize..5).prop_map(|(gaps, d)| {
        let mut b = vec![-1.0];
        for g in gaps {
            let last = *b.last().unwrap();
            b.push(last + g);
        }
        (b, d)
    })
}

proptest! {
    #[test]
    fn partition_of_unity_and_nonnegativity((bx, dx) in knot_strategy(), (by, dy) in knot_strategy(), u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let space = TensorSpace::new([KnotVector::clamped(&bx, dx).unwrap(), KnotVector::clamped(&by, dy).unwrap()]).unwrap();
        let b = space.bounds();
        let x = [b.lo[0] + u * (b.hi[0] - b.lo[0]), b.lo[1] + v * (b.hi[1] - b.lo[1])];
        let mut sum = 0.0;
        for j in space.indices() {
            let val = space.eval(&MultiIndex(j), &x).unwrap();
            prop_assert!(val >= 0.0);
            if !space.support_box(&MultiIndex(j)).contains(&x) {
                prop_assert_eq!(val, 0.0);
            }
            sum += val;
        }
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn dyadic_refine_contains_parent_knots((b, d) in knot_strategy()) {
        let kv = KnotVector::clamped(&b, d).unwrap();
        let fine = kv.dyadic_refine();
        prop_assert!(kv.is_nested_in(&fine));
        prop_assert_eq!(fine.num_cells(), 2 * kv.num_cells());
        let g = fine.greville();
        prop_assert!(g.windows(2).all(|w| w[0] <= w[1]));
    }
}
