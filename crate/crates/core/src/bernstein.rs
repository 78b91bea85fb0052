//! Tensor-product Bernstein polynomials on the unit hyperrectangle.
//!
//! Coefficients are stored row-major with the last index varying fastest.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

/// Value of the univariate Bernstein polynomial with coefficients `c` at `t`.
pub fn de_casteljau(c: &[f64], t: f64) -> f64 {
    let mut w = c.to_vec();
    let s = 1.0 - t;
    for level in 1..w.len() {
        for i in 0..w.len() - level {
            w[i] = s * w[i] + t * w[i + 1];
        }
    }
    w[0]
}

/// Value and derivative at `t`.
pub fn de_casteljau_deriv(c: &[f64], t: f64) -> (f64, f64) {
    let n = c.len() - 1;
    if n == 0 {
        return (c[0], 0.0);
    }
    let mut w = c.to_vec();
    let s = 1.0 - t;
    for level in 1..n {
        for i in 0..=n - level {
            w[i] = s * w[i] + t * w[i + 1];
        }
    }
    let d = n as f64 * (w[1] - w[0]);
    (s * w[0] + t * w[1], d)
}

/// Splits at `t`, returning coefficients on `[0,t]` and `[t,1]`.
pub fn split(c: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let n = c.len();
    let mut w = c.to_vec();
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    let s = 1.0 - t;
    left[0] = w[0];
    right[n - 1] = w[n - 1];
    for level in 1..n {
        for i in 0..n - level {
            w[i] = s * w[i] + t * w[i + 1];
        }
        left[level] = w[0];
        right[n - 1 - level] = w[n - 1 - level];
    }
    (left, right)
}

/// Coefficients of the same polynomial with respect to the interval `[a,b]`.
pub fn restrict_1d(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    if c.len() == 1 {
        return c.to_vec();
    }
    if b >= 1.0 - a {
        let (left, _) = split(c, b);
        split(&left, a / b).1
    } else {
        let (_, right) = split(c, a);
        split(&right, (b - a) / (1.0 - a)).0
    }
}

/// Endpoint-inclusive Chebyshev nodes on [0,1] for degree `r`.
pub fn chebyshev_nodes(r: usize) -> Vec<f64> {
    if r == 0 {
        return vec![0.5];
    }
    (0..=r)
        .map(|i| 0.5 + 0.5 * (i as f64 * std::f64::consts::PI / r as f64).cos())
        .collect()
}

/// Bernstein basis values `b_i^n(t)` for `i = 0..=n`.
pub fn basis_values(n: usize, t: f64) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    let s = 1.0 - t;
    for j in 1..=n {
        let mut saved = 0.0;
        for i in 0..j {
            let tmp = b[i];
            b[i] = saved + s * tmp;
            saved = t * tmp;
        }
        b[j] = saved;
    }
    b
}

fn interpolation_matrix(r: usize) -> Arc<DMatrix<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DMatrix<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(m) = cache.lock().unwrap().get(&r) {
        return m.clone();
    }
    let nodes = chebyshev_nodes(r);
    let mut v = DMatrix::zeros(r + 1, r + 1);
    for (i, &x) in nodes.iter().enumerate() {
        let b = basis_values(r, x);
        for j in 0..=r {
            v[(i, j)] = b[j];
        }
    }
    let svd = v.svd(true, true);
    let smax = svd.singular_values.max();
    let pinv = svd
        .pseudo_inverse(100.0 * f64::EPSILON * smax)
        .expect("svd with vectors");
    let m = Arc::new(pinv);
    cache.lock().unwrap().insert(r, m.clone());
    m
}

/// Condition number of the Bernstein-Chebyshev interpolation matrix of degree `r`.
pub fn interpolation_condition(r: usize) -> f64 {
    let nodes = chebyshev_nodes(r);
    let mut v = DMatrix::zeros(r + 1, r + 1);
    for (i, &x) in nodes.iter().enumerate() {
        let b = basis_values(r, x);
        for j in 0..=r {
            v[(i, j)] = b[j];
        }
    }
    let s = v.singular_values();
    s.max() / s.min()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorPoly {
    degrees: Vec<usize>,
    coeffs: Vec<f64>,
}

impl TensorPoly {
    pub fn new(degrees: Vec<usize>, coeffs: Vec<f64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidArgument("polynomial needs at least one dimension".into()));
        }
        let expected: usize = degrees.iter().map(|n| n + 1).product();
        if expected != coeffs.len() {
            return Err(Error::ShapeMismatch { expected, got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(TensorPoly { degrees, coeffs })
    }

    pub fn zeros(degrees: Vec<usize>) -> Self {
        let len = degrees.iter().map(|n| n + 1).product();
        TensorPoly { degrees, coeffs: vec![0.0; len] }
    }

    pub fn constant(dims: usize, value: f64) -> Self {
        TensorPoly { degrees: vec![0; dims], coeffs: vec![value] }
    }

    /// Bernstein form of a polynomial given by monomial coefficients in the same layout.
    pub fn from_monomial(degrees: Vec<usize>, monomial: Vec<f64>) -> Result<Self> {
        let mut p = TensorPoly::new(degrees, monomial)?;
        for axis in 0..p.dims() {
            let n = p.degrees[axis];
            p = p.map_axis(axis, n + 1, |a, c| {
                for i in 0..=n {
                    let mut s = 0.0;
                    for (j, aj) in a.iter().enumerate().take(i + 1) {
                        s += binomial(i, j) / binomial(n, j) * aj;
                    }
                    c[i] = s;
                }
            });
        }
        Ok(p)
    }

    /// Bernstein coefficients from a function sampled at Chebyshev nodes.
    pub fn interpolate<F: FnMut(&[f64]) -> f64>(degrees: &[usize], mut f: F) -> Self {
        let nodes: Vec<Vec<f64>> = degrees.iter().map(|&r| chebyshev_nodes(r)).collect();
        let shape: Vec<usize> = degrees.iter().map(|n| n + 1).collect();
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut idx = vec![0usize; degrees.len()];
        let mut x = vec![0.0; degrees.len()];
        for _ in 0..total {
            for (k, &i) in idx.iter().enumerate() {
                x[k] = nodes[k][i];
            }
            values.push(f(&x));
            increment(&mut idx, &shape);
        }
        let mut p = TensorPoly { degrees: degrees.to_vec(), coeffs: values };
        for axis in 0..degrees.len() {
            p = p.interpolate_axis(axis);
        }
        p
    }

    fn interpolate_axis(&self, axis: usize) -> Self {
        let r = self.degrees[axis];
        let pinv = interpolation_matrix(r);
        self.map_axis(axis, r + 1, |v, c| {
            let out = &*pinv * DVector::from_column_slice(v);
            c.copy_from_slice(out.as_slice());
        })
    }

    pub fn dims(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        TensorPoly {
            degrees: self.degrees.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Applies `f` to every fibre along `axis`, producing fibres of length `new_len`.
    pub fn map_axis<F: FnMut(&[f64], &mut [f64])>(&self, axis: usize, new_len: usize, mut f: F) -> Self {
        let n = self.degrees[axis] + 1;
        let outer: usize = self.degrees[..axis].iter().map(|d| d + 1).product();
        let inner: usize = self.degrees[axis + 1..].iter().map(|d| d + 1).product();
        let mut out = vec![0.0; outer * new_len * inner];
        let mut fin = vec![0.0; n];
        let mut fout = vec![0.0; new_len];
        for o in 0..outer {
            for i in 0..inner {
                for j in 0..n {
                    fin[j] = self.coeffs[(o * n + j) * inner + i];
                }
                f(&fin, &mut fout);
                for j in 0..new_len {
                    out[(o * new_len + j) * inner + i] = fout[j];
                }
            }
        }
        let mut degrees = self.degrees.clone();
        degrees[axis] = new_len - 1;
        TensorPoly { degrees, coeffs: out }
    }

    /// Fixes coordinate `axis` to `t`, removing that axis.
    pub fn contract(&self, axis: usize, t: f64) -> Self {
        let mut p = self.map_axis(axis, 1, |c, o| o[0] = de_casteljau(c, t));
        p.degrees.remove(axis);
        p
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dims(), "point dimension");
        // contract the contiguous last axis repeatedly
        let mut buf = self.coeffs.clone();
        let mut len = buf.len();
        for axis in (0..self.dims()).rev() {
            let n = self.degrees[axis] + 1;
            let fibres = len / n;
            let t = x[axis];
            let s = 1.0 - t;
            for f in 0..fibres {
                let w = &mut buf[f * n..(f + 1) * n];
                for level in 1..n {
                    for i in 0..n - level {
                        w[i] = s * w[i] + t * w[i + 1];
                    }
                }
                buf[f] = buf[f * n];
            }
            len = fibres;
        }
        buf[0]
    }

    pub fn differentiate(&self, axis: usize) -> Self {
        let n = self.degrees[axis];
        if n == 0 {
            return TensorPoly::zeros(self.degrees.clone());
        }
        self.map_axis(axis, n, |c, d| {
            for i in 0..n {
                d[i] = n as f64 * (c[i + 1] - c[i]);
            }
        })
    }

    pub fn gradient(&self) -> Vec<TensorPoly> {
        (0..self.dims()).map(|k| self.differentiate(k)).collect()
    }

    /// Raises the degree along `axis` by `r`.
    pub fn elevate(&self, axis: usize, r: usize) -> Self {
        if r == 0 {
            return self.clone();
        }
        let n = self.degrees[axis];
        let m = n + r;
        self.map_axis(axis, m + 1, |c, e| {
            for i in 0..=m {
                let lo = i.saturating_sub(r);
                let hi = i.min(n);
                let mut s = 0.0;
                for j in lo..=hi {
                    s += c[j] * binomial(n, j) * binomial(r, i - j);
                }
                e[i] = s / binomial(m, i);
            }
        })
    }

    pub fn elevate_to(&self, degrees: &[usize]) -> Self {
        let mut p = self.clone();
        for (axis, &d) in degrees.iter().enumerate() {
            assert!(d >= p.degrees[axis], "elevation cannot lower degree");
            p = p.elevate(axis, d - p.degrees[axis]);
        }
        p
    }

    /// Coefficients of the polynomial re-expressed on the sub-box `[lo,hi]` of the unit box.
    pub fn restrict_box(&self, lo: &[f64], hi: &[f64]) -> Self {
        let mut p = self.clone();
        for axis in 0..self.dims() {
            let (a, b) = (lo[axis], hi[axis]);
            if a == 0.0 && b == 1.0 {
                continue;
            }
            let n = p.degrees[axis] + 1;
            p = p.map_axis(axis, n, |c, o| o.copy_from_slice(&restrict_1d(c, a, b)));
        }
        p
    }

    /// Univariate coefficients along `axis` with the other coordinates fixed to `base`.
    pub fn line_restrict(&self, axis: usize, base: &[f64]) -> Vec<f64> {
        assert_eq!(base.len() + 1, self.dims(), "base point dimension");
        let mut p = self.clone();
        for j in (0..self.dims()).rev() {
            if j == axis {
                continue;
            }
            let t = if j < axis { base[j] } else { base[j - 1] };
            p = p.contract(j, t);
        }
        p.coeffs
    }

    /// Restriction to the face `x_axis = 0` (`upper == false`) or `x_axis = 1`.
    pub fn face_restrict(&self, axis: usize, upper: bool) -> Self {
        let n = self.degrees[axis];
        let pick = if upper { n } else { 0 };
        let mut p = self.map_axis(axis, 1, |c, o| o[0] = c[pick]);
        p.degrees.remove(axis);
        p
    }

    /// Lowers the degree along each axis while the dropped component is negligible.
    pub fn reduce_degree(&self, tol: f64) -> Self {
        let mut p = self.clone();
        let scale = p.max_abs();
        if scale == 0.0 {
            return TensorPoly::constant(p.dims(), 0.0);
        }
        for axis in 0..p.dims() {
            loop {
                let n = p.degrees[axis];
                if n == 0 {
                    break;
                }
                let weights: Vec<f64> = (0..=n)
                    .map(|i| if (n - i) % 2 == 0 { binomial(n, i) } else { -binomial(n, i) })
                    .collect();
                let mut lead: f64 = 0.0;
                let _ = p.map_axis(axis, 1, |c, o| {
                    let s: f64 = c.iter().zip(&weights).map(|(a, w)| a * w).sum();
                    lead = lead.max(s.abs());
                    o[0] = 0.0;
                });
                if lead > tol * 2f64.powi(n as i32) * scale {
                    break;
                }
                let nodes = chebyshev_nodes(n - 1);
                let sampled = p.map_axis(axis, n, |c, o| {
                    for (v, &x) in o.iter_mut().zip(&nodes) {
                        *v = de_casteljau(c, x);
                    }
                });
                p = sampled.interpolate_axis(axis);
            }
        }
        p
    }
}

pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Affine map between the unit box and a user hyperrectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxMap {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxMap {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::InvalidArgument("box needs at least one dimension".into()));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidArgument(format!("degenerate box extent [{a}, {b}]")));
            }
        }
        Ok(BoxMap { lo, hi })
    }

    pub fn unit(dims: usize) -> Self {
        BoxMap { lo: vec![0.0; dims], hi: vec![1.0; dims] }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dims()).map(|k| self.extent(k)).product()
    }

    pub fn to_user(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .enumerate()
            .map(|(k, &tk)| self.lo[k] + self.extent(k) * tk)
            .collect()
    }

    pub fn to_ref(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &xk)| (xk - self.lo[k]) / self.extent(k))
            .collect()
    }

    /// Bernstein form on the unit box of a monomial polynomial in user coordinates.
    pub fn pull_back_monomial(&self, degrees: Vec<usize>, monomial: Vec<f64>) -> Result<TensorPoly> {
        if degrees.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: degrees.len() });
        }
        let mut p = TensorPoly::new(degrees, monomial)?;
        for axis in 0..p.dims() {
            let n = p.degrees[axis];
            let (lo, s) = (self.lo[axis], self.extent(axis));
            p = p.map_axis(axis, n + 1, |a, out| {
                for j in 0..=n {
                    let mut acc = 0.0;
                    for m in j..=n {
                        acc += a[m] * binomial(m, j) * lo.powi((m - j) as i32);
                    }
                    out[j] = acc * s.powi(j as i32);
                }
            });
        }
        let degrees = p.degrees.clone();
        TensorPoly::from_monomial(degrees, p.coeffs)
    }

    /// Sub-box of this box expressed in its own reference coordinates.
    pub fn sub_box_ref(&self, sub: &BoxMap) -> (Vec<f64>, Vec<f64>) {
        (self.to_ref(&sub.lo), self.to_ref(&sub.hi))
    }
}
