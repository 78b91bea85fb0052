//! Resultants and pseudo-discriminants of Bernstein polynomials.

use nalgebra::DMatrix;

use crate::bernstein::{binomial, TensorPoly};
use crate::error::{Error, Result};

/// Relative threshold below which an interpolated resultant counts as identically zero.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Bernstein-basis Sylvester matrix of univariate `f` (degree n) and `g` (degree m).
pub fn sylvester_matrix(f: &[f64], g: &[f64]) -> DMatrix<f64> {
    let n = f.len() - 1;
    let m = g.len() - 1;
    let size = n + m;
    let mut s = DMatrix::zeros(size, size);
    for r in 0..m {
        for (i, &fi) in f.iter().enumerate() {
            s[(r, r + i)] = fi * binomial(n, i);
        }
    }
    for r in 0..n {
        for (i, &gi) in g.iter().enumerate() {
            s[(m + r, r + i)] = gi * binomial(m, i);
        }
    }
    for j in 0..size {
        let d = binomial(size - 1, j);
        for i in 0..size {
            s[(i, j)] /= d;
        }
    }
    s
}

/// Bernstein-basis Bezout matrix of two univariate polynomials of equal degree.
pub fn bezout_matrix(f: &[f64], g: &[f64]) -> DMatrix<f64> {
    assert_eq!(f.len(), g.len(), "bezout needs equal degrees");
    let n = f.len() - 1;
    let mut b = DMatrix::zeros(n, n);
    let nf = n as f64;
    // 1-based recurrences, stored at (i-1, j-1)
    for i in 1..=n {
        b[(i - 1, 0)] = nf / i as f64 * (f[i] * g[0] - f[0] * g[i]);
    }
    for j in 1..n {
        b[(n - 1, j)] = nf / (n - j) as f64 * (f[n] * g[j] - f[j] * g[n]);
        for i in (j + 1)..n {
            let (fi, fj) = (i as f64, j as f64);
            b[(i - 1, j)] = nf * nf / (fi * (nf - fj)) * (f[i] * g[j] - f[j] * g[i])
                + fj * (nf - fi) / (fi * (nf - fj)) * b[(i, j - 1)];
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            b[(i, j)] = b[(j, i)];
        }
    }
    b
}

/// Determinant through Householder QR with column pivoting.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    if n == 0 {
        return 1.0;
    }
    let mut r = a.clone();
    let mut sign = 1.0;
    let mut norms: Vec<f64> = (0..n).map(|j| r.column(j).norm_squared()).collect();
    for k in 0..n {
        let (p, _) = norms[k..]
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        let p = p + k;
        if p != k {
            r.swap_columns(k, p);
            norms.swap(k, p);
            sign = -sign;
        }
        let alpha = r.view((k, k), (n - k, 1)).norm();
        if alpha == 0.0 {
            return 0.0;
        }
        if k + 1 < n {
            let x0 = r[(k, k)];
            let beta = if x0 >= 0.0 { -alpha } else { alpha };
            let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
            v[0] -= beta;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 > 0.0 {
                sign = -sign;
                for j in k..n {
                    let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * r[(k + i, j)]).sum();
                    let s = 2.0 * dot / vnorm2;
                    for (i, vi) in v.iter().enumerate() {
                        r[(k + i, j)] -= s * vi;
                    }
                }
            }
            for j in (k + 1)..n {
                norms[j] = r.view((k + 1, j), (n - k - 1, 1)).norm_squared();
            }
        }
    }
    sign * (0..n).map(|i| r[(i, i)]).product::<f64>()
}

fn hadamard_bound(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows()).map(|i| a.row(i).norm()).product()
}

/// Univariate resultant of two Bernstein coefficient vectors, with a magnitude scale.
pub fn resultant_1d(f: &[f64], g: &[f64]) -> (f64, f64) {
    let m = if f.len() == g.len() && f.len() > 1 { bezout_matrix(f, g) } else { sylvester_matrix(f, g) };
    (determinant(&m), hadamard_bound(&m))
}

/// Resultant of `f` and `g` eliminating `axis`, as a Bernstein polynomial in the remaining variables.
pub fn resultant(f: &TensorPoly, g: &TensorPoly, axis: usize) -> Result<TensorPoly> {
    if f.dims() != g.dims() {
        return Err(Error::DimensionMismatch { expected: f.dims(), got: g.dims() });
    }
    if f.dims() < 2 {
        return Err(Error::InvalidArgument("resultant needs at least two dimensions".into()));
    }
    let (nk, mk) = (f.degrees()[axis], g.degrees()[axis]);
    if nk == 0 && mk == 0 {
        return Err(Error::InvalidArgument("both polynomials have degree zero along the eliminated axis".into()));
    }
    let degrees: Vec<usize> = (0..f.dims())
        .filter(|&l| l != axis)
        .map(|l| f.degrees()[l] * mk + g.degrees()[l] * nk)
        .collect();
    let mut scale: f64 = 0.0;
    let p = TensorPoly::interpolate(&degrees, |x| {
        let fl = f.line_restrict(axis, x);
        let gl = g.line_restrict(axis, x);
        let (v, s) = resultant_1d(&fl, &gl);
        scale = scale.max(s);
        v
    });
    if p.max_abs() <= DEGENERATE_TOL * scale || scale == 0.0 {
        return Err(Error::Degenerate("resultant vanishes identically".into()));
    }
    Ok(p)
}

/// Resultant of `f` and its derivative along `axis`.
pub fn pseudo_discriminant(f: &TensorPoly, axis: usize) -> Result<TensorPoly> {
    if f.degrees()[axis] == 0 {
        return Err(Error::InvalidArgument("degree zero along the eliminated axis".into()));
    }
    resultant(f, &f.differentiate(axis), axis)
}
