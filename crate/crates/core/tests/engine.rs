use std::f64::consts::PI;

use implicitquad::bernstein::{BoxMap, TensorPoly};
use implicitquad::engine::{self, EngineConfig, Mode, Plan, Schemes};
use implicitquad::quad1d::{gauss_legendre, Scheme};
use implicitquad::testbed::{self, PolyClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GL: Scheme = Scheme::GaussLegendre;
const TS: Scheme = Scheme::TanhSinh;

fn mono(bm: &BoxMap, degrees: &[usize], c: &[f64]) -> TensorPoly {
    bm.pull_back_monomial(degrees.to_vec(), c.to_vec()).unwrap()
}

fn unit() -> BoxMap {
    BoxMap::unit(2)
}

fn circle(bm: &BoxMap, cx: f64, cy: f64, r: f64) -> TensorPoly {
    let f = testbed::circle(cx, cy, r, &bm.lo, &bm.hi);
    mono(bm, &f.degrees, &f.monomial)
}

fn cfg(q: usize, mode: Mode) -> EngineConfig {
    EngineConfig::default().with_q(q).with_mode(mode)
}

#[test]
fn no_interface_gives_tensor_rule() {
    let plan = Plan::new(&[], &unit(), &cfg(3, Mode::Volume)).unwrap();
    let rule = plan.rule(3, &Schemes::Fixed(vec![GL, GL])).unwrap();
    assert_eq!(rule.len(), 9);
    let g = gauss_legendre(3);
    let mut expected: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            expected.push((0.5 + 0.5 * g.x[i], 0.5 + 0.5 * g.x[j], 0.25 * g.w[i] * g.w[j]));
        }
    }
    for n in &rule.nodes {
        assert!(expected
            .iter()
            .any(|e| (e.0 - n.x[0]).abs() < 1e-15 && (e.1 - n.x[1]).abs() < 1e-15 && (e.2 - n.w).abs() < 1e-15));
    }
    assert!((rule.total_weight() - 1.0).abs() < 1e-15);
}

#[test]
fn diagonal_line_splits_square_in_half() {
    let p = mono(&unit(), &[1, 1], &[-1.0, 1.0, 1.0, 0.0]);
    for q in [1, 2, 5, 13] {
        let v = engine::integrate_volume(&[p.clone()], &unit(), &cfg(q, Mode::Volume), |_| 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-14, "q={q} v={v}");
    }
}

#[test]
fn horizontal_line_direction_surface_and_flux() {
    let p = mono(&unit(), &[0, 1], &[-0.5, 1.0]);
    let plan = Plan::new(&[p.clone()], &unit(), &cfg(4, Mode::Volume)).unwrap();
    assert_eq!(plan.axes(), vec![1]);
    let rule = plan.rule(4, &Schemes::Auto).unwrap();
    let below = rule.nodes.iter().filter(|n| n.signs[0] < 0).count();
    assert_eq!(below * 2, rule.len());
    assert!(rule.nodes.iter().all(|n| (n.x[1] < 0.5) == (n.signs[0] < 0)));
    let s = engine::integrate_surface(&[p.clone()], &unit(), &cfg(4, Mode::Surface), |_| 1.0).unwrap();
    assert!((s - 1.0).abs() < 1e-14);
    let f = engine::integrate_flux(&[p], &unit(), &cfg(4, Mode::SurfaceFlux), |_| 1.0).unwrap();
    assert!(f[0].abs() < 1e-15 && (f[1] - 1.0).abs() < 1e-14, "{f:?}");
}

#[test]
fn centred_circle_ties_break_deterministically() {
    let p = circle(&unit(), 0.5, 0.5, 0.3);
    let a = Plan::new(&[p.clone()], &unit(), &cfg(4, Mode::Volume)).unwrap().axes();
    let b = Plan::new(&[p], &unit(), &cfg(4, Mode::Volume)).unwrap().axes();
    assert_eq!(a, b);
    assert_eq!(a.len(), 1);
}

#[test]
fn forced_axis_is_honoured() {
    let p = mono(&unit(), &[0, 1], &[-0.5, 1.0]);
    let c = EngineConfig { forced_axes: vec![0], ..cfg(4, Mode::Volume) };
    let plan = Plan::new(&[p.clone()], &unit(), &c).unwrap();
    assert_eq!(plan.axes(), vec![0]);
    let v = plan.integrate(4, &Schemes::Auto, &[-1], |_| 1.0).unwrap();
    assert!((v - 0.5).abs() < 1e-14);
}

#[test]
fn ellipse_area_and_perimeter() {
    let f = testbed::ellipse();
    let p = f.poly();
    let bm = f.boxmap();
    let v = engine::integrate_volume(&[p.clone()], &bm, &cfg(50, Mode::Volume).with_schemes(&[TS, GL]), |_| 1.0).unwrap();
    assert!((v / (PI / 2.0) - 1.0).abs() < 1e-12, "{v}");
    let s = engine::integrate_surface(&[p], &bm, &cfg(60, Mode::Surface), |_| 1.0).unwrap();
    // periodic trapezoid rule on the parametrisation converges geometrically
    let m = 400;
    let exact: f64 = (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            t.sin().hypot(0.5 * t.cos())
        })
        .sum::<f64>()
        * 2.0
        * PI
        / m as f64;
    assert!((exact - 4.84422411).abs() < 1e-8);
    assert!((s / exact - 1.0).abs() < 1e-8, "{s} vs {exact}");
}

#[test]
fn closed_curve_flux_vanishes_for_every_order() {
    let f = testbed::ellipse();
    for q in [1, 2, 3, 8] {
        let v = engine::integrate_flux(&[f.poly()], &f.boxmap(), &cfg(q, Mode::SurfaceFlux), |_| 1.0).unwrap();
        assert!(v.iter().all(|c| c.abs() <= 1e-13), "q={q} {v:?}");
    }
}

#[test]
fn flux_of_position_gives_enclosed_area() {
    // divergence theorem: flux of x e_x over the ellipse is its area
    let f = testbed::ellipse();
    let rule = engine::build_rule(&[f.poly()], &f.boxmap(), &cfg(30, Mode::SurfaceFlux)).unwrap();
    let mut total = 0.0;
    for n in &rule.nodes {
        total += n.x[0] * n.flux.as_ref().unwrap()[0];
    }
    assert!((total - PI / 2.0).abs() < 1e-8, "{total}");
}

#[test]
fn lens_of_two_unit_circles() {
    let bm = BoxMap::new(vec![-1.1, -1.1], vec![2.1, 1.1]).unwrap();
    let phis = [circle(&bm, 0.0, 0.0, 1.0), circle(&bm, 1.0, 0.0, 1.0)];
    let plan = Plan::new(&phis, &bm, &cfg(30, Mode::Volume)).unwrap();
    let rule = plan.rule(30, &Schemes::Auto).unwrap();
    let lens = rule.cluster_by_signs(&[-1, -1]).total_weight();
    assert!((lens - (2.0 * PI / 3.0 - 3.0f64.sqrt() / 2.0)).abs() < 1e-8, "{lens}");
    let crescent = rule.cluster_by_signs(&[-1, 1]).total_weight();
    assert!((crescent + lens - PI).abs() < 1e-8);
    let mirrored = rule.cluster_by_signs(&[1, -1]).total_weight();
    assert!((mirrored - crescent).abs() < 1e-8);
    let all: f64 = [[-1, -1], [-1, 1], [1, -1], [1, 1]].iter().map(|p| rule.cluster_by_signs(p).total_weight()).sum();
    assert!((all - rule.total_weight()).abs() < 1e-12 * all);
    assert!((rule.total_weight() - bm.volume()).abs() < 1e-12 * bm.volume());
    let via_integrate = plan.integrate(30, &Schemes::Auto, &[-1, -1], |_| 1.0).unwrap();
    assert!((via_integrate - lens).abs() < 1e-13);
}

#[test]
fn simplex_volumes() {
    let v2 = engine::simplex_volume(&[], 2, &cfg(20, Mode::Volume), |_| 1.0).unwrap();
    assert!((v2 - 0.5).abs() < 1e-12);
    let v3 = engine::simplex_volume(&[], 3, &cfg(20, Mode::Volume), |_| 1.0).unwrap();
    assert!((v3 - 1.0 / 6.0).abs() < 1e-10);
    // x over the triangle is 1/6
    let m = engine::simplex_volume(&[], 2, &cfg(5, Mode::Volume), |x| x[0]).unwrap();
    assert!((m - 1.0 / 6.0).abs() < 1e-13);
}

#[test]
fn simplex_circle_segment_matches_monte_carlo() {
    let (cx, cy, r) = (0.45, 0.35, 0.4);
    let p = circle(&unit(), cx, cy, r);
    let v = engine::simplex_volume(&[p], 2, &cfg(30, Mode::Volume), |_| 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000_000;
    let mut hits = 0usize;
    for _ in 0..n {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        if x + y <= 1.0 && (x - cx).powi(2) + (y - cy).powi(2) < r * r {
            hits += 1;
        }
    }
    let phat = hits as f64 / n as f64;
    let sigma = (phat * (1.0 - phat) / n as f64).sqrt();
    assert!((v - phat).abs() <= 3.0 * sigma, "v={v} mc={phat} sigma={sigma}");
}

#[test]
fn surface_nodes_lie_on_the_interface() {
    let f = testbed::ellipse();
    let bm = f.boxmap();
    let diam = bm.extent(0).hypot(bm.extent(1));
    for mode in [Mode::Surface, Mode::SurfaceFlux] {
        let rule = engine::build_rule(&[f.poly()], &bm, &cfg(12, mode)).unwrap();
        assert!(!rule.is_empty());
        for n in &rule.nodes {
            let g = (2.0 * n.x[0]).hypot(8.0 * n.x[1]);
            assert!(f.eval_user(&n.x).abs() <= 1e-9 * g * diam, "{:?}", n.x);
            assert!(n.w > 0.0);
        }
    }
    // normals are unit and outward
    let rule = engine::build_rule(&[f.poly()], &bm, &cfg(12, Mode::Surface)).unwrap();
    for n in &rule.nodes {
        let nv = n.normal.as_ref().unwrap();
        assert!((nv[0].hypot(nv[1]) - 1.0).abs() < 1e-12);
        assert!(nv[0] * n.x[0] + nv[1] * n.x[1] > 0.0);
    }
}

#[test]
fn volume_nodes_lie_strictly_inside() {
    let f = testbed::ellipse();
    let rule = engine::build_rule(&[f.poly()], &f.boxmap(), &cfg(20, Mode::Volume).with_schemes(&[TS, TS])).unwrap();
    for n in &rule.nodes {
        let t = f.boxmap().to_ref(&n.x);
        assert!(t.iter().all(|&v| v > 0.0 && v < 1.0));
        let v = f.eval_user(&n.x);
        if v.abs() > 1e-10 {
            assert_eq!(n.signs[0] < 0, v < 0.0, "{:?}", n.x);
        }
    }
}

#[test]
fn random_class_a_rules_are_positive_and_mask_independent() {
    let schemes = Schemes::Fixed(vec![GL, GL]);
    for (seed, p) in testbed::random_instances(2, PolyClass::A, 30, 0) {
        let plan = Plan::new(&[p.clone()], &unit(), &cfg(8, Mode::Volume)).unwrap();
        let rule = plan.rule(8, &schemes).unwrap();
        assert!(rule.nodes.iter().all(|n| n.w > 0.0), "seed {seed}");
        assert!((rule.total_weight() - 1.0).abs() < 1e-13, "seed {seed}");
        let with = plan.integrate(40, &schemes, &[-1], |x| x[0] * x[1] + 1.0).unwrap();
        let off = EngineConfig { use_masks: false, forced_axes: plan.axes(), ..cfg(8, Mode::Volume) };
        let without = Plan::new(&[p], &unit(), &off).unwrap().integrate(40, &schemes, &[-1], |x| x[0] * x[1] + 1.0).unwrap();
        assert!((with - without).abs() <= 1e-12 * with.abs(), "seed {seed}: {with} vs {without}");
    }
}

#[test]
fn plan_is_reusable_across_orders_and_threads() {
    let f = testbed::ellipse();
    let plan = Plan::new(&[f.poly()], &f.boxmap(), &cfg(10, Mode::Volume)).unwrap();
    let a = plan.integrate(30, &Schemes::Auto, &[-1], |_| 1.0).unwrap();
    let results: Vec<f64> = std::thread::scope(|s| {
        let hs: Vec<_> = (0..3).map(|_| s.spawn(|| plan.integrate(30, &Schemes::Auto, &[-1], |_| 1.0).unwrap())).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(results.iter().all(|&r| r == a));
    let b = plan.integrate(10, &Schemes::Auto, &[-1], |_| 1.0).unwrap();
    assert!((a - b).abs() > 0.0 && (a - b).abs() < 1e-3);
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = mono(&unit(), &[0, 1], &[-0.5, 1.0]);
    assert!(Plan::new(&[p.clone()], &unit(), &cfg(0, Mode::Volume)).is_err());
    let plan = Plan::new(&[p.clone()], &unit(), &cfg(3, Mode::Volume)).unwrap();
    assert!(plan.rule(0, &Schemes::Auto).is_err());
    assert!(Plan::new(&[p], &BoxMap::unit(3), &cfg(3, Mode::Volume)).is_err());
    let zero = TensorPoly::new(vec![1, 1], vec![0.0; 4]).unwrap();
    assert!(Plan::new(&[zero], &unit(), &cfg(3, Mode::Volume)).is_err());
}

#[test]
fn bilinear_cross() {
    let f = testbed::bilinear(0.0);
    let bm = f.boxmap();
    let rule = engine::build_rule(&[f.poly()], &bm, &cfg(10, Mode::Volume)).unwrap();
    let pos = rule.cluster_by_signs(&[1]);
    assert!((pos.total_weight() - 0.5).abs() < 1e-14);
    for n in &pos.nodes {
        assert!((n.x[0] - 0.5) * (n.x[1] - 0.5) > 0.0);
    }
    let s = engine::integrate_surface(&[f.poly()], &bm, &cfg(10, Mode::Surface), |_| 1.0).unwrap();
    assert!((s - 2.0).abs() < 1e-12, "{s}");
}

#[test]
fn ellipsoid_volume() {
    let f = testbed::ellipsoid();
    let v = engine::integrate_volume(&[f.poly()], &f.boxmap(), &cfg(20, Mode::Volume), |_| 1.0).unwrap();
    assert!((v / (2.0 * PI / 9.0) - 1.0).abs() < 1e-6, "{v}");
}
