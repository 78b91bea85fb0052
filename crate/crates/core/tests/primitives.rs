use implicitquad::algebraic::{bezout_matrix, determinant, pseudo_discriminant, resultant, sylvester_matrix};
use implicitquad::bernstein::{binomial, de_casteljau, TensorPoly};
use implicitquad::masking::{intersection_mask, nonzero_mask, orthant_test, Mask};
use implicitquad::quad1d::{gauss_legendre, lambert_w, rule, tanh_sinh, Scheme};
use implicitquad::roots1d::{eigen_roots, roots};
use implicitquad::Error;
use proptest::prelude::*;

/// Bernstein coefficients of a product, by the degree-raising convolution.
fn bmul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (m, n) = (a.len() - 1, b.len() - 1);
    let mut c = vec![0.0; m + n + 1];
    for i in 0..=m {
        for j in 0..=n {
            c[i + j] += binomial(m, i) * binomial(n, j) / binomial(m + n, i + j) * a[i] * b[j];
        }
    }
    c
}

fn from_roots(rs: &[f64]) -> Vec<f64> {
    rs.iter().fold(vec![1.0], |acc, &r| bmul(&acc, &[-r, 1.0 - r]))
}

/// Sign changes on a fine grid, refined by bisection.
fn sign_scan(c: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let f = |x: f64| de_casteljau(c, x);
    for i in 0..n {
        let (mut a, mut b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 && a > 0.0 {
            out.push(a);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

fn separated_roots(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.03..0.97f64, k).prop_filter("separated", |v| {
        let mut s = v.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.windows(2).all(|w| w[1] - w[0] > 0.02)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roots_agree_with_sign_scan(rs in separated_roots(5), outside in proptest::collection::vec(1.2..3.0f64, 0..3)) {
        let mut all = rs.clone();
        all.extend(outside.iter().map(|v| -v));
        let c = from_roots(&all);
        let found = roots(&c).unwrap();
        let oracle = sign_scan(&c, 4000);
        prop_assert_eq!(found.len(), oracle.len());
        for (a, b) in found.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn eigen_path_matches_subdivision_path(rs in separated_roots(4)) {
        let c = from_roots(&rs);
        let a = roots(&c).unwrap();
        let b = eigen_roots(&c).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn roots_are_scale_invariant(rs in separated_roots(3), s in prop_oneof![1e-8..1e-6f64, 1e5..1e8f64]) {
        let c = from_roots(&rs);
        let scaled: Vec<f64> = c.iter().map(|v| v * s).collect();
        prop_assert_eq!(roots(&c).unwrap().len(), roots(&scaled).unwrap().len());
    }

    #[test]
    fn orthant_test_is_sound(a in proptest::collection::vec(-1.0..1.0f64, 6), b in proptest::collection::vec(-1.0..1.0f64, 6), x in 0.0..1.0f64) {
        // a certified pair cannot vanish together anywhere
        if orthant_test(&a, &b) {
            prop_assert!(de_casteljau(&a, x).abs() + de_casteljau(&b, x).abs() > 0.0);
        }
    }

    #[test]
    fn nonzero_mask_covers_zero_set(c in proptest::collection::vec(-1.0..1.0f64, 16), px in 0.0..1.0f64, py in 0.0..1.0f64) {
        let mut p = TensorPoly::new(vec![3, 3], c).unwrap();
        // shift so the sampled point lies on the zero set
        let v = p.evaluate(&[px, py]);
        p = TensorPoly::new(vec![3, 3], p.coeffs().iter().map(|c| c - v).collect()).unwrap();
        let m = nonzero_mask(&p, &Mask::full(2, 8));
        prop_assert!(m.lookup(&[px, py]));
    }

    #[test]
    fn intersection_mask_covers_common_zero(c in proptest::collection::vec(-1.0..1.0f64, 9), d in proptest::collection::vec(-1.0..1.0f64, 12), px in 0.0..1.0f64, py in 0.0..1.0f64) {
        let f = TensorPoly::new(vec![2, 2], c).unwrap();
        let g = TensorPoly::new(vec![3, 2], d).unwrap();
        let fv = f.evaluate(&[px, py]);
        let gv = g.evaluate(&[px, py]);
        let f = TensorPoly::new(vec![2, 2], f.coeffs().iter().map(|c| c - fv).collect()).unwrap();
        let g = TensorPoly::new(vec![3, 2], g.coeffs().iter().map(|c| c - gv).collect()).unwrap();
        let full = Mask::full(2, 8);
        let m = intersection_mask(&f, &full, &g, &full);
        prop_assert!(m.lookup(&[px, py]));
    }
}

#[test]
fn roots_examples() {
    assert_eq!(roots(&[-1.0, 1.0]).unwrap(), vec![0.5]);
    assert!(roots(&[1.0, 2.0, 3.0]).unwrap().is_empty());
    // root exactly at an endpoint is excluded
    assert!(roots(&[0.0, 1.0]).unwrap().is_empty());
    assert!(matches!(roots(&[0.0, 0.0, 0.0]), Err(Error::ZeroPolynomial)));
}

#[test]
fn double_root_is_reported_once() {
    let c = from_roots(&[0.4, 0.4, 0.7]);
    let r = roots(&c).unwrap();
    assert_eq!(r.len(), 2, "{r:?}");
    assert!((r[0] - 0.4).abs() < 1e-6 && (r[1] - 0.7).abs() < 1e-12);
}

#[test]
fn tangential_touch_without_sign_change() {
    // (x - 0.3)^2 + tiny never crosses
    let mut c = from_roots(&[0.3, 0.3]);
    for v in &mut c {
        *v += 1e-3;
    }
    assert!(roots(&c).unwrap().is_empty());
}

#[test]
fn gauss_legendre_exactness() {
    for q in 1..=12 {
        let r = gauss_legendre(q);
        for k in 0..(2 * q) {
            let s: f64 = r.x.iter().zip(&r.w).map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k + 1) as f64 };
            assert!((s - exact).abs() < 1e-14, "q={q} k={k}");
        }
        let k = 2 * q;
        let s: f64 = r.x.iter().zip(&r.w).map(|(x, w)| w * x.powi(k as i32)).sum();
        assert!((s - 2.0 / (k + 1) as f64).abs() > 1e-10, "q={q} should not be exact at degree {k}");
    }
}

#[test]
fn rules_are_positive_symmetric_and_sum_to_two() {
    for scheme in [Scheme::GaussLegendre, Scheme::TanhSinh] {
        for q in [1, 2, 3, 7, 20, 61, 100] {
            let r = rule(scheme, q);
            assert_eq!(r.x.len(), q);
            assert!(r.w.iter().all(|&w| w > 0.0));
            assert!((r.w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for i in 0..q {
                assert!((r.x[i] + r.x[q - 1 - i]).abs() < 1e-15);
                assert!((r.w[i] - r.w[q - 1 - i]).abs() <= 1e-12 * r.w[i]);
                assert!(r.x[i] > -1.0 && r.x[i] < 1.0);
                assert!(r.gap[i] > 0.0 && (r.gap[i] - (1.0 - r.x[i].abs())).abs() < 1e-15);
            }
            assert!(r.x.windows(2).all(|w| w[0] <= w[1]));
            assert!(r.gap.windows(2).take(q / 2).all(|w| w[0] <= w[1]));
        }
    }
}

#[test]
fn tanh_sinh_handles_endpoint_singularity() {
    // integral of sqrt(1 - x^2) over (-1,1) is pi/2; derivative blows up at the ends
    let err = |q| {
        let r = tanh_sinh(q);
        let s: f64 = r.w.iter().zip(&r.gap).map(|(w, g)| w * (g * (2.0 - g)).sqrt()).sum();
        (s - std::f64::consts::FRAC_PI_2).abs()
    };
    let e: Vec<f64> = [5, 10, 20, 40].iter().map(|&q| err(q)).collect();
    assert!(e[3] < 1e-12, "{e:?}");
    assert!(e.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-14), "{e:?}");
    // Gauss-Legendre converges only algebraically here
    let r = gauss_legendre(40);
    let s: f64 = r.w.iter().zip(&r.x).map(|(w, x)| w * (1.0 - x * x).sqrt()).sum();
    assert!((s - std::f64::consts::FRAC_PI_2).abs() > 1e-7);
}

#[test]
fn map_to_keeps_nodes_inside() {
    for scheme in [Scheme::GaussLegendre, Scheme::TanhSinh] {
        let r = rule(scheme, 80);
        let (a, b) = (1.0, 1.0 + 1e-9);
        let mapped: Vec<(f64, f64)> = r.map_to(a, b).collect();
        assert!(mapped.iter().all(|&(x, _)| x > a && x < b));
        let total: f64 = mapped.iter().map(|p| p.1).sum();
        assert!((total - (b - a)).abs() < 1e-13 * (b - a));
    }
}

#[test]
fn lambert_w_inverts() {
    for z in [1e-8, 0.1, 1.0, 2.718281828459045, 50.0, 1e4] {
        let w = lambert_w(z);
        assert!((w * w.exp() - z).abs() <= 1e-13 * z.max(1.0), "z={z}");
    }
    assert!((lambert_w(std::f64::consts::E) - 1.0).abs() < 1e-15);
}

fn resultant_ratio(a: &[f64], b: &[f64], bezout: bool) -> f64 {
    let f = from_roots(a);
    let g = from_roots(b);
    let m = if bezout { bezout_matrix(&f, &g) } else { sylvester_matrix(&f, &g) };
    let prod: f64 = a.iter().flat_map(|x| b.iter().map(move |y| x - y)).product();
    determinant(&m) / prod
}

#[test]
fn sylvester_determinant_is_product_of_root_differences() {
    let cases = [
        (vec![0.1, 0.5], vec![0.2, 0.35, 0.9]),
        (vec![0.3, -0.4], vec![1.5, 0.05, 0.6]),
        (vec![0.7, 0.71], vec![0.2, 0.0, 2.0]),
    ];
    let ratios: Vec<f64> = cases.iter().map(|(a, b)| resultant_ratio(a, b, false)).collect();
    for r in &ratios {
        assert!(r.is_finite() && r.abs() > 1e-6);
        assert!((r / ratios[0] - 1.0).abs() < 1e-10, "{ratios:?}");
    }
}

#[test]
fn bezout_determinant_is_product_of_root_differences() {
    let cases = [
        (vec![0.1, 0.5, 0.8], vec![0.2, 0.35, 0.9]),
        (vec![0.3, -0.4, 0.45], vec![1.5, 0.05, 0.6]),
        (vec![0.6, 0.61, 0.62], vec![0.2, -1.0, 0.33]),
    ];
    let ratios: Vec<f64> = cases.iter().map(|(a, b)| resultant_ratio(a, b, true)).collect();
    for r in &ratios {
        assert!(r.is_finite() && r.abs() > 1e-6);
        assert!((r / ratios[0] - 1.0).abs() < 1e-9, "{ratios:?}");
    }
    // common root makes it vanish
    let f = from_roots(&[0.25, 0.5]);
    let g = from_roots(&[0.5, 0.75]);
    assert!(determinant(&bezout_matrix(&f, &g)).abs() < 1e-14);
}

#[test]
fn resultant_vanishes_on_projected_intersections() {
    // circle x^2 + y^2 = 0.5 and line y = x meet at x = 0.5
    let circle = TensorPoly::from_monomial(vec![2, 2], vec![-0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    let line = TensorPoly::from_monomial(vec![1, 1], vec![0.0, -1.0, 1.0, 0.0]).unwrap();
    let r = resultant(&circle, &line, 1).unwrap();
    assert_eq!(r.dims(), 1);
    let zs = roots(r.coeffs()).unwrap();
    assert_eq!(zs.len(), 1);
    assert!((zs[0] - 0.5).abs() < 1e-10);
}

#[test]
fn discriminant_finds_silhouette() {
    // circle centred at (0.5,0.5), radius 0.3: vertical tangents at x = 0.2, 0.8
    let c = TensorPoly::from_monomial(vec![2, 2], vec![0.5 - 0.09 - 0.0, -1.0, 1.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    let d = pseudo_discriminant(&c, 1).unwrap();
    let zs = roots(d.coeffs()).unwrap();
    assert_eq!(zs.len(), 2, "{zs:?}");
    assert!((zs[0] - 0.2).abs() < 1e-8 && (zs[1] - 0.8).abs() < 1e-8);
}

#[test]
fn degenerate_resultant_is_reported() {
    let f = TensorPoly::from_monomial(vec![1, 1], vec![0.0, -1.0, 1.0, 0.0]).unwrap();
    assert!(matches!(resultant(&f, &f, 1), Err(Error::Degenerate(_))));
}

