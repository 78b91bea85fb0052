//! One-dimensional Gauss-Legendre and tanh-sinh rules on (-1,1).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "gl")]
    GaussLegendre,
    #[serde(rename = "ts")]
    TanhSinh,
}

impl Scheme {
    pub fn parse(s: &str) -> Option<Scheme> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gl" | "gauss" | "gauss-legendre" => Some(Scheme::GaussLegendre),
            "ts" | "tanh-sinh" | "tanhsinh" => Some(Scheme::TanhSinh),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::GaussLegendre => "gl",
            Scheme::TanhSinh => "ts",
        }
    }
}

/// A rule on (-1,1). `gap[i]` is `1 - |x[i]|` computed without cancellation.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub gap: Vec<f64>,
}

impl Rule1d {
    /// Nodes and weights on `[a,b]`; nodes stay strictly inside.
    pub fn map_to(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        self.x.iter().zip(&self.w).zip(&self.gap).map(move |((&x, &w), &g)| {
            let mut y = if x < 0.0 { a + h * g } else { b - h * g };
            if y <= a {
                y = next_up(a);
            }
            if y >= b {
                y = next_down(b);
            }
            (y, w * h)
        })
    }
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

pub fn rule(scheme: Scheme, q: usize) -> Arc<Rule1d> {
    static CACHE: OnceLock<Mutex<HashMap<(Scheme, usize), Arc<Rule1d>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&(scheme, q)) {
        return r.clone();
    }
    let r = Arc::new(match scheme {
        Scheme::GaussLegendre => gauss_legendre(q),
        Scheme::TanhSinh => tanh_sinh(q),
    });
    cache.lock().unwrap().insert((scheme, q), r.clone());
    r
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn gauss_legendre(q: usize) -> Rule1d {
    assert!(q >= 1, "rule needs at least one node");
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    if q == 1 {
        return Rule1d { x: vec![0.0], w: vec![2.0], gap: vec![1.0] };
    }
    for i in 0..q.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(q, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(q, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[q - 1 - i] = z;
        w[i] = wi;
        w[q - 1 - i] = wi;
    }
    if q % 2 == 1 {
        x[q / 2] = 0.0;
    }
    let gap = x.iter().map(|v| 1.0 - v.abs()).collect();
    Rule1d { x, w, gap }
}

/// Principal branch of the Lambert W function for `z >= 0`.
pub fn lambert_w(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let mut w = (1.0 + z).ln();
    for _ in 0..100 {
        let e = w.exp();
        let f = w * e - z;
        let wp1 = w + 1.0;
        let dw = f / (e * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= dw;
        if dw.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

pub fn tanh_sinh(q: usize) -> Rule1d {
    assert!(q >= 1, "rule needs at least one node");
    if q == 1 {
        return Rule1d { x: vec![0.0], w: vec![2.0], gap: vec![1.0] };
    }
    let h = 2.0 / q as f64 * lambert_w(0.6 * PI * (q as f64 - 1.0));
    let mut nodes: Vec<(f64, f64, f64, f64)> = (1..=q)
        .map(|l| {
            let sgn = if l % 2 == 0 { 1.0 } else { -1.0 };
            let t = if q % 2 == 1 {
                h * (l / 2) as f64 * sgn
            } else {
                h * (l.div_ceil(2) as f64 - 0.5) * sgn
            };
            let u = 0.5 * PI * t.sinh();
            let c = u.cosh();
            let mut w = 0.5 * h * PI * t.cosh() / (c * c);
            if w < f64::MIN_POSITIVE {
                w = f64::MIN_POSITIVE;
            }
            // 1 - tanh|u| = 2 / (exp(2|u|) + 1)
            let gap = 2.0 / ((2.0 * u.abs()).exp() + 1.0);
            let x = u.tanh().signum() * (1.0 - gap).min(next_down(1.0));
            (x, w, gap, t)
        })
        .collect();
    // sort on t: clamped nodes near the ends share x
    nodes.sort_by(|a, b| a.3.partial_cmp(&b.3).unwrap());
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    let s = 2.0 / total;
    Rule1d {
        x: nodes.iter().map(|n| n.0).collect(),
        w: nodes.iter().map(|n| n.1 * s).collect(),
        gap: nodes.iter().map(|n| n.2).collect(),
    }
}
