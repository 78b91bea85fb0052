use implicitquad::bernstein::{self, BoxMap, TensorPoly};
use implicitquad::Error;
use proptest::prelude::*;

fn poly_strategy(dims: usize, max_deg: usize) -> impl Strategy<Value = TensorPoly> {
    proptest::collection::vec(0..=max_deg, dims).prop_flat_map(|degrees| {
        let n: usize = degrees.iter().map(|d| d + 1).product();
        proptest::collection::vec(-1.0..1.0f64, n).prop_map(move |c| TensorPoly::new(degrees.clone(), c).unwrap())
    })
}

fn point(dims: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..=1.0f64, dims)
}

/// Direct Bernstein sum, independent of de Casteljau.
fn bernstein_sum(p: &TensorPoly, x: &[f64]) -> f64 {
    let d = p.dims();
    let mut total = 0.0;
    let mut idx = vec![0; d];
    for &c in p.coeffs() {
        let mut b = c;
        for k in 0..d {
            let n = p.degrees()[k];
            let i = idx[k];
            b *= bernstein::binomial(n, i) * x[k].powi(i as i32) * (1.0 - x[k]).powi((n - i) as i32);
        }
        total += b;
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] <= p.degrees()[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    total
}

proptest! {
    #[test]
    fn evaluate_matches_basis_sum(p in poly_strategy(2, 5), x in point(2)) {
        prop_assert!((p.evaluate(&x) - bernstein_sum(&p, &x)).abs() <= 1e-13);
    }

    #[test]
    fn partition_of_unity(c in -10.0..10.0f64, degrees in proptest::collection::vec(0usize..6, 3), x in point(3)) {
        let n: usize = degrees.iter().map(|d| d + 1).product();
        let p = TensorPoly::new(degrees, vec![c; n]).unwrap();
        prop_assert!((p.evaluate(&x) - c).abs() <= 1e-14 * c.abs().max(1.0));
    }

    #[test]
    fn convex_hull(p in poly_strategy(3, 3), x in point(3)) {
        let lo = p.coeffs().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.coeffs().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = p.evaluate(&x);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn restrict_box_composes(p in poly_strategy(2, 4), a in point(2), b in point(2), x in point(2)) {
        let lo: Vec<f64> = a.iter().zip(&b).map(|(s, t)| s.min(*t) * 0.5).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(s, t)| 0.5 + s.max(*t) * 0.5).collect();
        let inner_lo = vec![0.25, 0.1];
        let inner_hi = vec![0.75, 0.6];
        let twice = p.restrict_box(&lo, &hi).restrict_box(&inner_lo, &inner_hi);
        let composed_lo: Vec<f64> = (0..2).map(|k| lo[k] + (hi[k] - lo[k]) * inner_lo[k]).collect();
        let composed_hi: Vec<f64> = (0..2).map(|k| lo[k] + (hi[k] - lo[k]) * inner_hi[k]).collect();
        let once = p.restrict_box(&composed_lo, &composed_hi);
        prop_assert!((twice.evaluate(&x) - once.evaluate(&x)).abs() <= 1e-12);
    }

    #[test]
    fn restrict_box_is_pointwise_reparametrisation(p in poly_strategy(2, 5), x in point(2)) {
        let lo = [0.2, 0.35];
        let hi = [0.9, 0.4];
        let r = p.restrict_box(&lo, &hi);
        let y: Vec<f64> = (0..2).map(|k| lo[k] + (hi[k] - lo[k]) * x[k]).collect();
        prop_assert!((r.evaluate(&x) - p.evaluate(&y)).abs() <= 1e-12);
    }

    #[test]
    fn elevate_is_exact(p in poly_strategy(2, 4), axis in 0usize..2, r in 1usize..4, x in point(2)) {
        let e = p.elevate(axis, r);
        prop_assert_eq!(e.degrees()[axis], p.degrees()[axis] + r);
        prop_assert!((e.evaluate(&x) - p.evaluate(&x)).abs() <= 1e-13 * p.max_abs().max(1.0));
    }

    #[test]
    fn derivative_matches_finite_difference(p in poly_strategy(2, 4), axis in 0usize..2, x in proptest::collection::vec(0.1..0.9f64, 2)) {
        let h = 1e-6;
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[axis] += h;
        xm[axis] -= h;
        let fd = (p.evaluate(&xp) - p.evaluate(&xm)) / (2.0 * h);
        prop_assert!((p.differentiate(axis).evaluate(&x) - fd).abs() <= 1e-6);
    }

    #[test]
    fn line_restrict_matches_evaluate(p in poly_strategy(3, 3), axis in 0usize..3, x in point(3)) {
        let base: Vec<f64> = x.iter().enumerate().filter(|(k, _)| *k != axis).map(|(_, v)| *v).collect();
        let line = p.line_restrict(axis, &base);
        prop_assert!((bernstein::de_casteljau(&line, x[axis]) - p.evaluate(&x)).abs() <= 1e-13);
    }

    #[test]
    fn interpolation_round_trip(p in poly_strategy(2, 6)) {
        let q = TensorPoly::interpolate(p.degrees(), |x| p.evaluate(x));
        for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}

#[test]
fn differentiating_a_constant_gives_exact_zero() {
    let p = TensorPoly::new(vec![3, 2], vec![1.7; 12]).unwrap();
    for k in 0..2 {
        assert!(p.differentiate(k).coeffs().iter().all(|&c| c == 0.0));
    }
}

#[test]
fn monomial_conversion_examples() {
    let p = TensorPoly::from_monomial(vec![2], vec![-1.0, 0.0, 1.0]).unwrap();
    assert_eq!(p.coeffs(), &[-1.0, -1.0, 0.0]);
    for (x, v) in [(0.0, -1.0), (0.5, -0.75), (1.0, 0.0)] {
        assert!((p.evaluate(&[x]) - v).abs() < 1e-15);
    }
    let x = TensorPoly::from_monomial(vec![1], vec![0.0, 1.0]).unwrap();
    assert_eq!(x.coeffs(), &[0.0, 1.0]);
    let c = TensorPoly::from_monomial(vec![0, 0], vec![2.5]).unwrap();
    assert_eq!(c.coeffs(), &[2.5]);
}

#[test]
fn monomial_round_trip_pointwise() {
    // x^6 - 3 x^2 y^5 + 0.5 y on the unit square
    let mut m = vec![0.0; 49];
    m[6 * 7] = 1.0;
    m[2 * 7 + 5] = -3.0;
    m[1] = 0.5;
    let p = TensorPoly::from_monomial(vec![6, 6], m).unwrap();
    for &(x, y) in &[(0.1f64, 0.9f64), (0.5, 0.5), (0.77, 0.13)] {
        let exact = x.powi(6) - 3.0 * x * x * y.powi(5) + 0.5 * y;
        assert!((p.evaluate(&[x, y]) - exact).abs() < 1e-12);
    }
}

#[test]
fn box_pull_back_evaluates_in_user_coordinates() {
    let b = BoxMap::new(vec![-2.0, 1.0], vec![3.0, 1.5]).unwrap();
    // x*y - y^2
    let mut m = vec![0.0; 9];
    m[3 + 1] = 1.0;
    m[2] = -1.0;
    let p = b.pull_back_monomial(vec![2, 2], m).unwrap();
    for t in [[0.1, 0.2], [0.9, 0.4], [0.5, 1.0]] {
        let x = b.to_user(&t);
        assert!((p.evaluate(&t) - (x[0] * x[1] - x[1] * x[1])).abs() < 1e-13);
    }
}

#[test]
fn interpolation_constant_values() {
    let p = TensorPoly::interpolate(&[4, 3], |_| 2.0);
    assert!(p.coeffs().iter().all(|c| (c - 2.0).abs() < 1e-12));
}

#[test]
fn interpolation_conditioning_grows_like_powers_of_two() {
    let c: Vec<f64> = [4, 8, 12].iter().map(|&n| bernstein::interpolation_condition(n)).collect();
    for (w, n) in c.windows(2).zip([4.0, 4.0]) {
        let growth = (w[1] / w[0]).log2();
        assert!(growth > 0.5 * n && growth < 1.5 * n, "growth {growth}");
    }
}

#[test]
fn shape_errors() {
    assert!(matches!(TensorPoly::new(vec![2], vec![1.0, 2.0]), Err(Error::ShapeMismatch { .. })));
    assert!(BoxMap::new(vec![0.0], vec![0.0]).is_err());
}

#[test]
fn degree_reduction_recovers_low_degree() {
    let p = TensorPoly::from_monomial(vec![1, 1], vec![0.3, -1.0, 2.0, 0.5]).unwrap();
    let e = p.elevate_to(&[5, 4]);
    let r = e.reduce_degree(1e-11);
    assert_eq!(r.degrees(), &[1, 1]);
    for x in [[0.2, 0.7], [0.6, 0.1]] {
        assert!((r.evaluate(&x) - p.evaluate(&x)).abs() < 1e-12);
    }
}
