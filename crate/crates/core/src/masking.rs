//! Subcell masks recording where a polynomial, or a pair, may vanish.
//!
//! A mask partitions the unit box into `m^d` subcells. A zero bit is a proof
//! that the associated zero set does not meet the (slightly enlarged) subcell.

use serde::{Deserialize, Serialize};

use crate::bernstein::TensorPoly;
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    dims: usize,
    m: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(dims: usize, m: usize, value: bool) -> Result<Self> {
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("mask resolution {m} is not a power of two")));
        }
        Ok(Mask { dims, m, bits: vec![value; m.pow(dims as u32)] })
    }

    pub fn full(dims: usize, m: usize) -> Self {
        Mask::new(dims, m, true).expect("valid resolution")
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn index(&self, cell: &[usize]) -> usize {
        cell.iter().fold(0, |acc, &c| acc * self.m + c)
    }

    pub fn cell(&self, index: usize) -> Vec<usize> {
        let mut c = vec![0; self.dims];
        let mut r = index;
        for k in (0..self.dims).rev() {
            c[k] = r % self.m;
            r /= self.m;
        }
        c
    }

    pub fn get(&self, cell: &[usize]) -> bool {
        self.bits[self.index(cell)]
    }

    pub fn set(&mut self, cell: &[usize], value: bool) {
        let i = self.index(cell);
        self.bits[i] = value;
    }

    pub fn and(&self, other: &Mask) -> Mask {
        assert_eq!(self.bits.len(), other.bits.len());
        Mask {
            dims: self.dims,
            m: self.m,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect(),
        }
    }

    /// Bit of the subcell containing the point `x` of the unit box.
    pub fn lookup(&self, x: &[f64]) -> bool {
        let cell: Vec<usize> = x
            .iter()
            .map(|&t| ((t * self.m as f64).floor().max(0.0) as usize).min(self.m - 1))
            .collect();
        self.get(&cell)
    }

    /// Lower-dimensional mask with bit set when any cell along `axis` is set.
    pub fn collapse(&self, axis: usize) -> Mask {
        let mut out = Mask { dims: self.dims - 1, m: self.m, bits: vec![false; self.m.pow(self.dims as u32 - 1)] };
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                let mut c = self.cell(i);
                c.remove(axis);
                out.set(&c, true);
            }
        }
        out
    }

    /// Layer of cells adjacent to the face `x_axis = 0` or `x_axis = 1`.
    pub fn face_restriction(&self, axis: usize, upper: bool) -> Mask {
        let layer = if upper { self.m - 1 } else { 0 };
        let mut out = Mask { dims: self.dims - 1, m: self.m, bits: vec![false; self.m.pow(self.dims as u32 - 1)] };
        for (i, &b) in self.bits.iter().enumerate() {
            let mut c = self.cell(i);
            if c[axis] == layer && b {
                c.remove(axis);
                out.set(&c, true);
            }
        }
        out
    }

    /// Text grid of the bits; rows run along the first axis.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let row = if self.dims == 0 { 1 } else { self.m };
        for (i, &b) in self.bits.iter().enumerate() {
            s.push(if b { '1' } else { '0' });
            if (i + 1) % row == 0 {
                s.push('\n');
            }
        }
        s
    }
}

/// Expansion applied to every examined region, relative to the cell width.
pub fn expansion(m: usize) -> f64 {
    (1.0 / 64.0) / m as f64
}

fn interval(f: &[f64], g: &[f64]) -> bool {
    // is there alpha with f_i + alpha g_i > 0 for every i
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&fi, &gi) in f.iter().zip(g) {
        if gi > 0.0 {
            lo = lo.max(-fi / gi);
        } else if gi < 0.0 {
            hi = hi.min(-fi / gi);
        } else if fi <= 0.0 {
            return false;
        }
        if lo >= hi {
            return false;
        }
    }
    lo < hi
}

/// True when some combination `a f + b g` has strictly one-signed coefficients,
/// which proves `f` and `g` have no common zero.
pub fn orthant_test(f: &[f64], g: &[f64]) -> bool {
    let nf: Vec<f64> = f.iter().map(|v| -v).collect();
    let ng: Vec<f64> = g.iter().map(|v| -v).collect();
    interval(f, g) || interval(&nf, g) || interval(g, f) || interval(&ng, f)
}

/// True when the coefficients are all strictly positive or all strictly negative.
pub fn uniform_sign(f: &[f64]) -> bool {
    f.iter().all(|&v| v > 0.0) || f.iter().all(|&v| v < 0.0)
}

/// Cells where `f` and `g` may share a zero.
pub fn intersection_mask(f: &TensorPoly, fm: &Mask, g: &TensorPoly, gm: &Mask) -> Mask {
    assert_eq!(f.dims(), g.dims());
    let both = fm.and(gm);
    let mut out = Mask::new(f.dims(), fm.resolution(), false).expect("resolution");
    let degrees: Vec<usize> = f.degrees().iter().zip(g.degrees()).map(|(a, b)| *a.max(b)).collect();
    let d = f.dims();
    let a = vec![0; d];
    let b = vec![fm.resolution(); d];
    examine(&mut out, &both, &a, &b, &mut |lo, hi| {
        let fr = f.restrict_box(lo, hi).elevate_to(&degrees);
        let gr = g.restrict_box(lo, hi).elevate_to(&degrees);
        orthant_test(fr.coeffs(), gr.coeffs())
    });
    out
}

/// Cells where `f` may vanish.
pub fn nonzero_mask(f: &TensorPoly, fm: &Mask) -> Mask {
    let mut out = Mask::new(f.dims(), fm.resolution(), false).expect("resolution");
    let d = f.dims();
    let a = vec![0; d];
    let b = vec![fm.resolution(); d];
    examine(&mut out, fm, &a, &b, &mut |lo, hi| uniform_sign(f.restrict_box(lo, hi).coeffs()));
    out
}

fn examine(out: &mut Mask, active: &Mask, a: &[usize], b: &[usize], proves_empty: &mut dyn FnMut(&[f64], &[f64]) -> bool) {
    let d = a.len();
    let m = active.resolution();
    // skip regions with no active cell
    let mut any = false;
    let shape: Vec<usize> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mut off = vec![0; d];
    let total: usize = shape.iter().product();
    for _ in 0..total {
        let c: Vec<usize> = a.iter().zip(&off).map(|(x, o)| x + o).collect();
        if active.get(&c) {
            any = true;
            break;
        }
        crate::bernstein::increment(&mut off, &shape);
    }
    if !any {
        return;
    }
    let eps = expansion(m);
    let lo: Vec<f64> = a.iter().map(|&x| x as f64 / m as f64 - eps).collect();
    let hi: Vec<f64> = b.iter().map(|&x| x as f64 / m as f64 + eps).collect();
    if proves_empty(&lo, &hi) {
        return;
    }
    if shape.iter().all(|&s| s == 1) {
        out.set(a, true);
        return;
    }
    let half: Vec<usize> = shape.iter().map(|s| s / 2).collect();
    for child in 0..(1usize << d) {
        let ca: Vec<usize> = (0..d).map(|k| a[k] + if child >> (d - 1 - k) & 1 == 1 { half[k] } else { 0 }).collect();
        let cb: Vec<usize> = (0..d).map(|k| ca[k] + half[k]).collect();
        examine(out, active, &ca, &cb, proves_empty);
    }
}
