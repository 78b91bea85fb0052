//! Geometry fixtures, random polynomial generator and convergence-study helpers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{increment, BoxMap, TensorPoly};
use crate::engine::{EngineConfig, Mode, Plan, Schemes};
use crate::error::Result;
use crate::masking::{self, Mask};

/// Uniform sample in [0,1) from the top 53 bits of a 64-bit draw.
pub fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense monomial coefficients from `(coefficient, exponents)` terms.
pub fn monomial_from_terms(degrees: &[usize], terms: &[(f64, &[usize])]) -> Vec<f64> {
    let shape: Vec<usize> = degrees.iter().map(|n| n + 1).collect();
    let mut a = vec![0.0; shape.iter().product()];
    for (c, e) in terms {
        let idx = e.iter().zip(&shape).fold(0, |acc, (&i, &s)| acc * s + i);
        a[idx] += c;
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub degrees: Vec<usize>,
    pub monomial: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub notes: String,
}

impl Fixture {
    fn new(name: &str, degrees: &[usize], terms: &[(f64, &[usize])], lo: &[f64], hi: &[f64], notes: &str) -> Self {
        Fixture {
            name: name.into(),
            degrees: degrees.to_vec(),
            monomial: monomial_from_terms(degrees, terms),
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            notes: notes.into(),
        }
    }

    pub fn boxmap(&self) -> BoxMap {
        BoxMap::new(self.lo.clone(), self.hi.clone()).expect("fixture box")
    }

    /// Bernstein form on the unit box mapped onto the fixture box.
    pub fn poly(&self) -> TensorPoly {
        self.boxmap()
            .pull_back_monomial(self.degrees.clone(), self.monomial.clone())
            .expect("fixture polynomial")
    }

    pub fn eval_user(&self, x: &[f64]) -> f64 {
        let shape: Vec<usize> = self.degrees.iter().map(|n| n + 1).collect();
        let mut idx = vec![0; shape.len()];
        let mut s = 0.0;
        for &a in &self.monomial {
            if a != 0.0 {
                s += a * idx.iter().zip(x).map(|(&i, &xi)| xi.powi(i as i32)).product::<f64>();
            }
            increment(&mut idx, &shape);
        }
        s
    }
}

pub fn bilinear(eps: f64) -> Fixture {
    Fixture::new(
        "bilinear",
        &[1, 1],
        &[(1.0, &[1, 1]), (-0.5, &[1, 0]), (-0.5, &[0, 1]), (0.25 - eps * eps, &[0, 0])],
        &[0.0, 0.0],
        &[1.0, 1.0],
        "(x-1/2)(y-1/2) - eps^2; crossing lines at eps = 0",
    )
}

pub fn ellipse() -> Fixture {
    Fixture::new("ellipse", &[2, 2], &[(1.0, &[2, 0]), (4.0, &[0, 2]), (-1.0, &[0, 0])], &[-1.1, -1.1], &[1.1, 1.1], "x^2 + 4y^2 - 1")
}

pub fn ellipsoid() -> Fixture {
    Fixture::new(
        "ellipsoid",
        &[2, 2, 2],
        &[(1.0, &[2, 0, 0]), (4.0, &[0, 2, 0]), (9.0, &[0, 0, 2]), (-1.0, &[0, 0, 0])],
        &[-1.1; 3],
        &[1.1; 3],
        "x^2 + 4y^2 + 9z^2 - 1",
    )
}

/// Circle of radius `r` centred at `(cx, cy)`.
pub fn circle(cx: f64, cy: f64, r: f64, lo: &[f64], hi: &[f64]) -> Fixture {
    Fixture::new(
        "circle",
        &[2, 2],
        &[
            (1.0, &[2, 0]),
            (1.0, &[0, 2]),
            (-2.0 * cx, &[1, 0]),
            (-2.0 * cy, &[0, 1]),
            (cx * cx + cy * cy - r * r, &[0, 0]),
        ],
        lo,
        hi,
        "circle",
    )
}

pub fn fixtures() -> Vec<Fixture> {
    vec![
        bilinear(0.0),
        Fixture::new(
            "trilinear",
            &[1, 1, 1],
            &[
                (0.5, &[0, 0, 0]),
                (-1.4, &[0, 0, 1]),
                (2.9, &[1, 1, 0]),
                (-6.5, &[1, 1, 1]),
                (3.2, &[1, 0, 1]),
                (-1.2, &[1, 0, 0]),
                (3.3, &[0, 1, 1]),
                (-1.3, &[0, 1, 0]),
            ],
            &[0.0; 3],
            &[1.0; 3],
            "two components, one with a tunnel",
        ),
        Fixture::new(
            "deltoid",
            &[4, 4],
            &[
                (1.0, &[4, 0]),
                (2.0, &[2, 2]),
                (1.0, &[0, 4]),
                (18.0, &[2, 0]),
                (18.0, &[0, 2]),
                (-8.0, &[3, 0]),
                (24.0, &[1, 2]),
                (-27.0, &[0, 0]),
            ],
            &[-2.5, -3.0],
            &[3.5, 3.0],
            "three cusps",
        ),
        Fixture::new(
            "folium",
            &[3, 3],
            &[(1.0, &[3, 0]), (1.0, &[0, 3]), (-3.0, &[1, 1])],
            &[-1.4, -1.5],
            &[2.1, 2.0],
            "self-intersection at the origin",
        ),
        Fixture::new(
            "trifolium",
            &[4, 4],
            &[(1.0, &[4, 0]), (2.0, &[2, 2]), (1.0, &[0, 4]), (-1.0, &[3, 0]), (3.0, &[1, 2])],
            &[-1.0, -1.1],
            &[1.2, 1.1],
            "triple point at the origin",
        ),
        Fixture::new(
            "ding-dong",
            &[2, 2, 3],
            &[(1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (-1.0, &[0, 0, 2]), (1.0, &[0, 0, 3])],
            &[-1.0; 3],
            &[1.0; 3],
            "conical singularity at the origin",
        ),
        Fixture::new(
            "mobius",
            &[2, 3, 2],
            &[
                (-4.0, &[0, 2, 0]),
                (1.0, &[2, 1, 0]),
                (1.0, &[0, 3, 0]),
                (4.0, &[1, 0, 1]),
                (-2.0, &[2, 0, 1]),
                (-2.0, &[0, 2, 1]),
                (1.0, &[0, 1, 2]),
            ],
            &[-1.25, -2.0, -2.0],
            &[2.75, 2.0, 2.0],
            "self-intersecting band",
        ),
        Fixture::new(
            "oloid",
            &[2, 2, 3],
            &[(1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (1.0, &[0, 0, 3])],
            &[-1.0; 3],
            &[1.0; 3],
            "cusp at the origin",
        ),
        Fixture::new(
            "deltoid3",
            &[4, 4, 4],
            &[
                (1.0, &[4, 0, 0]),
                (1.0, &[0, 4, 0]),
                (1.0, &[0, 0, 4]),
                (2.0, &[2, 2, 0]),
                (2.0, &[2, 0, 2]),
                (2.0, &[0, 2, 2]),
                (18.0, &[2, 0, 0]),
                (18.0, &[0, 2, 0]),
                (18.0, &[0, 0, 2]),
                (-8.0, &[3, 0, 0]),
                (-8.0, &[0, 0, 3]),
                (24.0, &[1, 2, 0]),
                (-27.0, &[0, 0, 0]),
            ],
            &[-2.5, -3.0, -2.0],
            &[3.5, 3.0, 4.0],
            "cuspidal edges",
        ),
        ellipse(),
        ellipsoid(),
    ]
}

pub fn fixture(name: &str) -> Option<Fixture> {
    fixtures().into_iter().find(|f| f.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGeomSpec {
    pub dims: usize,
    pub alpha: f64,
    pub seed: u64,
    pub volume_fraction_bounds: (f64, f64),
}

impl RandomGeomSpec {
    pub fn new(dims: usize, seed: u64) -> Self {
        RandomGeomSpec { dims, alpha: 2.0, seed, volume_fraction_bounds: (0.1, 0.9) }
    }
}

const MC_SAMPLES: usize = 100_000;
const MC_SUBSEED: u64 = 0x9e37_79b9_7f4a_7c15;

fn legendre_monomial(i: usize) -> [f64; 3] {
    match i {
        0 => [0.5f64.sqrt(), 0.0, 0.0],
        1 => [0.0, 1.5f64.sqrt(), 0.0],
        _ => {
            let s = (5.0f64 / 8.0).sqrt();
            [-s, 0.0, 3.0 * s]
        }
    }
}

/// Polynomial from Legendre coefficients `c` (one per multi-index in {0,1,2}^d).
pub fn legendre_poly(dims: usize, alpha: f64, c: &[f64]) -> TensorPoly {
    let shape = vec![3; dims];
    let mut mono = vec![0.0; 3usize.pow(dims as u32)];
    let mut idx = vec![0; dims];
    for &ci in c {
        let total: usize = idx.iter().sum();
        let lambda = if total == 0 { 1.0 } else { (total as f64).powf(-alpha) };
        // expand the product of univariate Legendre polynomials
        let mut jdx = vec![0; dims];
        for m in mono.iter_mut() {
            let mut term = ci * lambda;
            for k in 0..dims {
                term *= legendre_monomial(idx[k])[jdx[k]];
            }
            *m += term;
            increment(&mut jdx, &shape);
        }
        increment(&mut idx, &shape);
    }
    BoxMap::new(vec![-1.0; dims], vec![1.0; dims])
        .unwrap()
        .pull_back_monomial(vec![2; dims], mono)
        .expect("legendre polynomial")
}

/// Monte-Carlo estimate of the fraction of the unit box where `p < 0`.
pub fn volume_fraction(p: &TensorPoly, samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut x = vec![0.0; p.dims()];
    let mut neg = 0usize;
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = unit_uniform(&mut r);
        }
        if p.evaluate(&x) < 0.0 {
            neg += 1;
        }
    }
    neg as f64 / samples as f64
}

/// Random polynomial on (-1,1)^d, returned in Bernstein form on the unit box.
pub fn random_poly(spec: &RandomGeomSpec) -> TensorPoly {
    let mut r = rng(spec.seed);
    let n = 3usize.pow(spec.dims as u32);
    loop {
        let c: Vec<f64> = (0..n).map(|_| 2.0 * unit_uniform(&mut r) - 1.0).collect();
        let p = legendre_poly(spec.dims, spec.alpha, &c);
        let f = volume_fraction(&p, MC_SAMPLES, spec.seed ^ MC_SUBSEED);
        if f >= spec.volume_fraction_bounds.0 && f <= spec.volume_fraction_bounds.1 {
            return p;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolyClass {
    A,
    B,
}

impl PolyClass {
    pub fn name(self) -> &'static str {
        match self {
            PolyClass::A => "A",
            PolyClass::B => "B",
        }
    }
}

/// Class A when masking proves some axis free of branching points.
pub fn classify(p: &TensorPoly) -> PolyClass {
    let full = Mask::full(p.dims(), masking::DEFAULT_RESOLUTION);
    for k in 0..p.dims() {
        let d = p.differentiate(k);
        if masking::intersection_mask(p, &full, &d, &full).is_empty() {
            return PolyClass::A;
        }
    }
    PolyClass::B
}

/// First `count` seeds from `start` whose random polynomial falls in `class`.
pub fn random_instances(dims: usize, class: PolyClass, count: usize, start: u64) -> Vec<(u64, TensorPoly)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = start;
    while out.len() < count {
        let batch: Vec<u64> = (seed..seed + 64).collect();
        let found: Vec<(u64, TensorPoly)> = batch
            .par_iter()
            .filter_map(|&s| {
                let p = random_poly(&RandomGeomSpec::new(dims, s));
                (classify(&p) == class).then_some((s, p))
            })
            .collect();
        for f in found {
            if out.len() < count {
                out.push(f);
            }
        }
        seed += 64;
    }
    out
}

fn lagrange_quadratic(x: f64) -> [f64; 3] {
    [0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)]
}

fn basis_values(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let per: Vec<[f64; 3]> = x.iter().map(|&t| lagrange_quadratic(t)).collect();
    let mut out = Vec::with_capacity(3usize.pow(d as u32));
    let mut idx = vec![0; d];
    let shape = vec![3; d];
    for _ in 0..3usize.pow(d as u32) {
        out.push(idx.iter().enumerate().map(|(k, &i)| per[k][i]).product());
        increment(&mut idx, &shape);
    }
    out
}

/// Mass matrices on `{phi < 0}` and `{phi > 0}` of the nodal quadratic basis on (-1,1)^d.
pub fn mass_matrices(plan: &Plan, q: usize, schemes: &Schemes) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = plan.rule(q, schemes)?;
    let nb = 3usize.pow(rule.dims as u32);
    let mut neg = vec![0.0; nb * nb];
    let mut pos = vec![0.0; nb * nb];
    for n in &rule.nodes {
        let b = basis_values(&n.x);
        let m = if n.signs[0] < 0 { &mut neg } else { &mut pos };
        for i in 0..nb {
            let wi = n.w * b[i];
            for j in 0..nb {
                m[i * nb + j] += wi * b[j];
            }
        }
    }
    Ok((neg, pos))
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn frobenius_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Plan for a random polynomial on (-1,1)^d.
pub fn random_plan(p: &TensorPoly) -> Result<Plan> {
    let bm = BoxMap::new(vec![-1.0; p.dims()], vec![1.0; p.dims()])?;
    Plan::new(std::slice::from_ref(p), &bm, &EngineConfig::default())
}

/// Relative Frobenius error of both phase mass matrices against order `reference_q`.
pub fn mass_matrix_error(plan: &Plan, q: usize, reference_q: usize, schemes: &Schemes) -> Result<f64> {
    let (rn, rp) = mass_matrices(plan, reference_q, schemes)?;
    let (n, p) = mass_matrices(plan, q, schemes)?;
    Ok(mass_error(&n, &p, &rn, &rp))
}

pub fn mass_error(n: &[f64], p: &[f64], rn: &[f64], rp: &[f64]) -> f64 {
    (frobenius_diff(p, rp) + frobenius_diff(n, rn)) / (frobenius(rp) + frobenius(rn))
}

/// Row of a random study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub seed: u64,
    pub class: PolyClass,
    pub q: usize,
    pub error: f64,
    pub runtime: f64,
}

/// E_q over `qs` for each instance, sharing one plan and reference per instance.
pub fn random_study(instances: &[(u64, TensorPoly)], qs: &[usize], schemes: &Schemes, reference_q: usize) -> Result<Vec<StudyRow>> {
    let rows: Result<Vec<Vec<StudyRow>>> = instances
        .par_iter()
        .map(|(seed, p)| {
            let class = classify(p);
            let plan = random_plan(p)?;
            let (rn, rp) = mass_matrices(&plan, reference_q, schemes)?;
            qs.iter()
                .map(|&q| {
                    let t = std::time::Instant::now();
                    let (n, pp) = mass_matrices(&plan, q, schemes)?;
                    Ok(StudyRow {
                        seed: *seed,
                        class,
                        q,
                        error: mass_error(&n, &pp, &rn, &rp),
                        runtime: t.elapsed().as_secs_f64(),
                    })
                })
                .collect()
        })
        .collect();
    let mut rows: Vec<StudyRow> = rows?.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.q, a.seed).cmp(&(b.q, b.seed)));
    Ok(rows)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Integral over a uniform `n^d` grid of cells, each with its own plan.
///
/// `phis` are Bernstein polynomials on the unit box mapped onto `boxmap`. For
/// volume mode the integrand is restricted to where every `phi < 0`.
pub fn grid_integral<F: Fn(&[f64]) -> f64 + Sync>(phis: &[TensorPoly], boxmap: &BoxMap, n: usize, cfg: &EngineConfig, f: F) -> Result<f64> {
    let pattern = vec![-1; phis.len()];
    let d = boxmap.dims();
    let cells = n.pow(d as u32);
    let parts: Result<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let mut idx = vec![0; d];
            let mut r = c;
            for k in (0..d).rev() {
                idx[k] = r % n;
                r /= n;
            }
            let lo: Vec<f64> = idx.iter().map(|&i| i as f64 / n as f64).collect();
            let hi: Vec<f64> = idx.iter().map(|&i| (i + 1) as f64 / n as f64).collect();
            let sub: Vec<TensorPoly> = phis.iter().map(|p| p.restrict_box(&lo, &hi)).collect();
            let cell = BoxMap::new(boxmap.to_user(&lo), boxmap.to_user(&hi))?;
            let plan = Plan::new(&sub, &cell, cfg)?;
            match cfg.mode {
                Mode::Volume => plan.integrate(cfg.q, &cfg.schemes, &pattern, &f),
                Mode::Surface => Ok(plan.rule(cfg.q, &cfg.schemes)?.integrate(&f)),
                Mode::SurfaceFlux => Ok(plan.rule(cfg.q, &cfg.schemes)?.integrate_flux(&f).iter().sum()),
            }
        })
        .collect();
    Ok(parts?.iter().sum())
}
