//! Real roots in (0,1) of univariate Bernstein polynomials.

use nalgebra::{DMatrix, Schur};

use crate::bernstein::{de_casteljau, de_casteljau_deriv, split};
use crate::error::{Error, Result};

const NEAR_ZERO: f64 = 1e-12;
const MAX_BISECTION_DEPTH: usize = 4;
const NEWTON_ITERS: usize = 12;
const IMAG_TOL: f64 = 1e-10;
const CLUSTER_TOL: f64 = 1e-8;
const ENDPOINT_TOL: f64 = 1e-12;
const CLUSTER_LINK: f64 = 1e-2;
/// Relative coefficient noise of polynomials known exactly up to rounding.
pub const EXACT_NOISE: f64 = 1e-15;
/// Relative coefficient noise typical of interpolated resultants.
pub const DERIVED_NOISE: f64 = 1e-11;

/// Connected components of points linked when closer than `link`.
fn components(points: &[(f64, f64)], link: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1) <= link {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for i in 0..n {
        let r = find(&mut label, i);
        let g = *index.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Sorted distinct roots of `c` in the open unit interval.
pub fn roots(c: &[f64]) -> Result<Vec<f64>> {
    roots_with_noise(c, EXACT_NOISE)
}

/// As [`roots`], for coefficients carrying relative noise `noise`. Eigenvalue clusters
/// narrower than the spread such noise induces on a multiple root collapse to one root.
pub fn roots_with_noise(c: &[f64], noise: f64) -> Result<Vec<f64>> {
    if c.is_empty() {
        return Err(Error::InvalidArgument("empty coefficient vector".into()));
    }
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coefficient".into()));
    }
    match c.len() - 1 {
        0 => Ok(vec![]),
        1 => Ok(linear(c)),
        2 => Ok(quadratic(c)),
        _ => match fast_roots(c) {
            Some(r) => Ok(r),
            None => eigen_roots_with_noise(c, noise),
        },
    }
}

fn linear(c: &[f64]) -> Vec<f64> {
    let d = c[0] - c[1];
    if d == 0.0 {
        return vec![];
    }
    let x = c[0] / d;
    if x > 0.0 && x < 1.0 {
        vec![x]
    } else {
        vec![]
    }
}

fn quadratic(c: &[f64]) -> Vec<f64> {
    let a = c[0] - 2.0 * c[1] + c[2];
    let b = 2.0 * (c[1] - c[0]);
    let k = c[0];
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if a.abs() <= 1e-15 * scale {
        return linear(&[c[0], c[0] + b]);
    }
    let mut disc = b * b - 4.0 * a * k;
    let dscale = b * b + (4.0 * a * k).abs();
    if disc < 0.0 {
        if -disc <= 1e-14 * dscale {
            disc = 0.0;
        } else {
            return vec![];
        }
    }
    let mut r = if disc == 0.0 {
        vec![-b / (2.0 * a)]
    } else {
        let q = -0.5 * (b + b.signum_nonzero() * disc.sqrt());
        let mut v = vec![q / a];
        if q != 0.0 {
            v.push(k / q);
        } else {
            v.push(-q / a);
        }
        v
    };
    r.retain(|&x| x > 0.0 && x < 1.0);
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r.dedup();
    r
}

trait SignumNonzero {
    fn signum_nonzero(self) -> f64;
}

impl SignumNonzero for f64 {
    fn signum_nonzero(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

fn sign_changes(c: &[f64]) -> usize {
    c.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count()
}

fn fast_roots(c: &[f64]) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    isolate(c, c, 0.0, 1.0, 0, &mut out)?;
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(out)
}

fn isolate(orig: &[f64], c: &[f64], a: f64, b: f64, depth: usize, out: &mut Vec<f64>) -> Option<()> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if c.iter().any(|v| v.abs() <= NEAR_ZERO * scale) {
        return None;
    }
    match sign_changes(c) {
        0 => Some(()),
        1 => {
            out.push(newton(orig, a, b)?);
            Some(())
        }
        _ if depth < MAX_BISECTION_DEPTH => {
            let (l, r) = split(c, 0.5);
            let m = 0.5 * (a + b);
            isolate(orig, &l, a, m, depth + 1, out)?;
            isolate(orig, &r, m, b, depth + 1, out)
        }
        _ => None,
    }
}

fn newton(c: &[f64], a: f64, b: f64) -> Option<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut lo, mut hi) = (a, b);
    let flo = de_casteljau(c, lo);
    let fhi = de_casteljau(c, hi);
    if (flo < 0.0) == (fhi < 0.0) {
        return None;
    }
    let lo_negative = flo < 0.0;
    let mut x = lo + (hi - lo) * flo / (flo - fhi);
    for _ in 0..NEWTON_ITERS {
        let (f, df) = de_casteljau_deriv(c, x);
        if f.abs() <= 1e-14 * scale {
            return simple_root(df, c.len(), scale).then_some(x);
        }
        if (f < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = if df != 0.0 { x - f / df } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 || hi - lo <= 1e-15 {
            return simple_root(df, c.len(), scale).then_some(x);
        }
    }
    None
}

/// A vanishing derivative hints at a nearly multiple root, better served by the eigen path.
fn simple_root(df: f64, len: usize, scale: f64) -> bool {
    df.abs() > 1e-6 * len as f64 * scale
}

/// Companion pencil `(A, B)` whose finite eigenvalues are the roots of `c`.
pub fn companion_pencil(c: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = c.len() - 1;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
        b[(i, i)] = (n - i) as f64 / (i + 1) as f64;
        b[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -c[j];
        b[(n - 1, j)] = -c[j];
    }
    b[(n - 1, n - 1)] += c[n] / n as f64;
    (a, b)
}

fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut cs = 0.0;
            for j in 0..n {
                if j != i {
                    cs += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if cs == 0.0 || r == 0.0 {
                continue;
            }
            let s = cs + r;
            let mut f = 1.0;
            let mut g = r / radix;
            let mut cc = cs;
            while cc < g {
                f *= radix;
                cc *= radix * radix;
            }
            g = r * radix;
            while cc > g {
                f /= radix;
                cc /= radix * radix;
            }
            if (cc + r / f) < 0.95 * s * f {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Roots through the eigenvalues of the companion pencil.
///
/// The pencil is transformed to `(A - sB)^{-1} B` for a shift `s` outside the
/// unit interval chosen to keep the shifted matrix well conditioned; its
/// eigenvalues `mu` give `lambda = s + 1/mu`, and roots at infinity map to `mu = 0`.
pub fn eigen_roots(c: &[f64]) -> Result<Vec<f64>> {
    eigen_roots_with_noise(c, EXACT_NOISE)
}

pub fn eigen_roots_with_noise(c: &[f64], noise: f64) -> Result<Vec<f64>> {
    let n = c.len() - 1;
    if n == 0 {
        return Ok(vec![]);
    }
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (a, b) = companion_pencil(c);
    let mut best: Option<(f64, f64, DMatrix<f64>)> = None;
    for &s in &[-0.5, 1.5, -0.173, 1.311, -1.7, 2.9] {
        let shifted = &a - &b * s;
        let lu = shifted.clone().lu();
        let u = lu.u();
        let dmax = (0..n).fold(0.0f64, |m, i| m.max(u[(i, i)].abs()));
        let dmin = (0..n).fold(f64::INFINITY, |m, i| m.min(u[(i, i)].abs()));
        let quality = if dmax > 0.0 { dmin / dmax } else { 0.0 };
        if best.as_ref().is_none_or(|(q, _, _)| quality > *q) {
            if let Some(x) = lu.solve(&b) {
                best = Some((quality, s, x));
            }
        }
        if quality > 1e-3 {
            break;
        }
    }
    let (_, shift, mut m) = best.ok_or_else(|| Error::Numerical("singular companion pencil".into()))?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite companion matrix".into()));
    }
    balance(&mut m);
    let schur = Schur::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("eigenvalue iteration did not converge".into()))?;
    let lambdas: Vec<(f64, f64)> = schur
        .complex_eigenvalues()
        .iter()
        .filter_map(|mu| {
            let mag2 = mu.re * mu.re + mu.im * mu.im;
            if mag2 == 0.0 {
                return None;
            }
            let (re, im) = (shift + mu.re / mag2, -mu.im / mag2);
            (re > -0.1 && re < 1.1 && im.abs() < 0.1).then_some((re, im))
        })
        .collect();
    let mut cand = Vec::new();
    for group in components(&lambdas, CLUSTER_LINK) {
        let m = group.len();
        let (cr, ci) = group.iter().fold((0.0, 0.0), |a, &i| (a.0 + lambdas[i].0 / m as f64, a.1 + lambdas[i].1 / m as f64));
        let radius = group
            .iter()
            .map(|&i| (lambdas[i].0 - cr).hypot(lambdas[i].1 - ci))
            .fold(0.0, f64::max);
        // a perturbed m-fold root scatters into the complex plane like noise^(1/m) but keeps an accurate centroid
        let complex_member = group.iter().any(|&i| lambdas[i].1.abs() > IMAG_TOL * (1.0 + lambdas[i].0.abs()));
        if m >= 2
            && complex_member
            && radius <= 2.0 * noise.powf(1.0 / m as f64)
            && ci.abs() <= IMAG_TOL * (1.0 + cr.abs())
        {
            cand.push(refine_multiple(c, cr, m, radius));
            continue;
        }
        for &i in &group {
            let (re, im) = lambdas[i];
            if im.abs() <= IMAG_TOL * (1.0 + re.abs()) {
                cand.push(polish(c, re));
            }
        }
    }
    cand.retain(|&x| x > ENDPOINT_TOL && x < 1.0 - ENDPOINT_TOL);
    cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(cluster(cand, c, noise * scale))
}

/// Newton on the (m-1)-th derivative, where an m-fold root is simple. Stays within `radius` of `x`.
fn refine_multiple(c: &[f64], x: f64, m: usize, radius: f64) -> f64 {
    let mut d = c.to_vec();
    for _ in 1..m {
        if d.len() <= 2 {
            break;
        }
        let n = (d.len() - 1) as f64;
        d = d.windows(2).map(|w| n * (w[1] - w[0])).collect();
    }
    let mut y = x;
    for _ in 0..8 {
        let (f, df) = de_casteljau_deriv(&d, y);
        if df == 0.0 || !f.is_finite() {
            break;
        }
        let next = y - f / df;
        if (next - x).abs() > radius {
            return x;
        }
        let step = (next - y).abs();
        y = next;
        if step <= 1e-16 {
            break;
        }
    }
    y
}

fn polish(c: &[f64], x: f64) -> f64 {
    let (f, df) = de_casteljau_deriv(c, x);
    if df == 0.0 {
        return x;
    }
    let y = x - f / df;
    if (y - x).abs() <= 1e-6 && de_casteljau(c, y).abs() <= f.abs() {
        y
    } else {
        x
    }
}

/// Merges roots that are duplicates or whose separating value is lost in `floor`.
fn cluster(sorted: Vec<f64>, c: &[f64], floor: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for x in sorted {
        let close = match group.last() {
            Some(&last) => {
                x - last <= CLUSTER_TOL
                    || (x - last <= 1e-6 && de_casteljau(c, 0.5 * (x + last)).abs() <= floor)
            }
            None => true,
        };
        if !close {
            out.push(group.iter().sum::<f64>() / group.len() as f64);
            group.clear();
        }
        group.push(x);
    }
    if !group.is_empty() {
        out.push(group.iter().sum::<f64>() / group.len() as f64);
    }
    out
}
