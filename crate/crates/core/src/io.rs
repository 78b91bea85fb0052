//! Polynomial input files and rule output documents.
//!
//! Polynomials are JSON objects `{"dims", "degrees", "basis", "coeffs"}` with coefficients
//! row-major, last index fastest. A file may hold one object or an array of them.
//! Monomial coefficients refer to user coordinates; Bernstein coefficients refer to the box.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bernstein::{BoxMap, TensorPoly};
use crate::engine::{Mode, QuadNode, QuadRule};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Bernstein,
    Monomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFile {
    pub dims: usize,
    pub degrees: Vec<usize>,
    pub basis: Basis,
    pub coeffs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(PolyFile),
    Many(Vec<PolyFile>),
}

impl PolyFile {
    pub fn from_poly(p: &TensorPoly) -> PolyFile {
        PolyFile { dims: p.dims(), degrees: p.degrees().to_vec(), basis: Basis::Bernstein, coeffs: p.coeffs().to_vec() }
    }

    /// Bernstein form on the unit box standing for `boxmap`.
    pub fn to_poly(&self, boxmap: &BoxMap) -> Result<TensorPoly> {
        if self.degrees.len() != self.dims {
            return Err(Error::Parse(format!("dims is {} but {} degrees given", self.dims, self.degrees.len())));
        }
        if self.dims != boxmap.dims() {
            return Err(Error::DimensionMismatch { expected: boxmap.dims(), got: self.dims });
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse("non-finite coefficient".into()));
        }
        match self.basis {
            Basis::Bernstein => TensorPoly::new(self.degrees.clone(), self.coeffs.clone()),
            Basis::Monomial => boxmap.pull_back_monomial(self.degrees.clone(), self.coeffs.clone()),
        }
    }
}

pub fn parse_polys(text: &str) -> Result<Vec<PolyFile>> {
    match serde_json::from_str::<OneOrMany>(text) {
        Ok(OneOrMany::One(p)) => Ok(vec![p]),
        Ok(OneOrMany::Many(v)) => Ok(v),
        Err(e) => Err(Error::Parse(e.to_string())),
    }
}

pub fn read_polys(path: &Path) -> Result<Vec<PolyFile>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_polys(&text)
}

/// Parses `"lo1,hi1;lo2,hi2;..."`.
pub fn parse_box(s: &str) -> Result<BoxMap> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let v: Vec<&str> = part.split(',').collect();
        if v.len() != 2 {
            return Err(Error::Parse(format!("box interval '{part}' needs two bounds")));
        }
        let a: f64 = v[0].trim().parse().map_err(|_| Error::Parse(format!("bad bound '{}'", v[0])))?;
        let b: f64 = v[1].trim().parse().map_err(|_| Error::Parse(format!("bad bound '{}'", v[1])))?;
        lo.push(a);
        hi.push(b);
    }
    BoxMap::new(lo, hi).map_err(|e| Error::Parse(e.to_string()))
}

/// A rule together with how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleDocument {
    pub q: usize,
    pub schemes: Vec<String>,
    pub axes: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rule: QuadRule,
}

impl RuleDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule documents serialize")
    }

    pub fn from_json(text: &str) -> Result<RuleDocument> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// One row per node. Columns: `x1..xd`, then `w` or `w1..wd` for flux rules,
    /// then `s1..sn`, then `n1..nd` and `interface` for surface rules.
    pub fn to_csv(&self) -> String {
        let d = self.rule.dims;
        let flux = self.rule.mode == Mode::SurfaceFlux;
        let surface = self.rule.mode != Mode::Volume;
        let nsigns = self.rule.nodes.first().map_or(0, |n| n.signs.len());
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        if flux {
            header.extend((1..=d).map(|i| format!("w{i}")));
        } else {
            header.push("w".into());
        }
        header.extend((1..=nsigns).map(|i| format!("s{i}")));
        if surface {
            header.extend((1..=d).map(|i| format!("n{i}")));
            header.push("interface".into());
        }
        let mut out = String::new();
        let _ = writeln!(out, "# q={} schemes={} axes={:?}", self.q, self.schemes.join(","), self.axes);
        out.push_str(&header.join(","));
        out.push('\n');
        for n in &self.rule.nodes {
            let mut row: Vec<String> = n.x.iter().map(|v| fmt_f64(*v)).collect();
            match (&n.flux, flux) {
                (Some(v), true) => row.extend(v.iter().map(|c| fmt_f64(*c))),
                _ => row.push(fmt_f64(n.w)),
            }
            row.extend(n.signs.iter().map(|s| s.to_string()));
            if surface {
                let normal = n.normal.clone().unwrap_or_else(|| vec![0.0; d]);
                row.extend(normal.iter().map(|c| fmt_f64(*c)));
                row.push(n.interface.map_or(String::new(), |i| i.to_string()));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads back the node table written by [`to_csv`]; box and mode must be supplied.
    pub fn rule_from_csv(text: &str, mode: Mode) -> Result<QuadRule> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))?.split(',').collect();
        let d = header.iter().filter(|h| h.starts_with('x')).count();
        let nsigns = header.iter().filter(|h| h.starts_with('s')).count();
        let flux = mode == Mode::SurfaceFlux;
        let surface = mode != Mode::Volume;
        let mut nodes = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != header.len() {
                return Err(Error::Parse(format!("row has {} fields, header has {}", f.len(), header.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
            let x = f[..d].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            let mut at = d;
            let (w, fl) = if flux {
                let v = f[at..at + d].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                at += d;
                (v.iter().map(|c| c.abs()).sum(), Some(v))
            } else {
                at += 1;
                (num(f[at - 1])?, None)
            };
            let signs = f[at..at + nsigns]
                .iter()
                .map(|s| s.trim().parse::<i8>().map_err(|_| Error::Parse(format!("bad sign '{s}'"))))
                .collect::<Result<Vec<_>>>()?;
            at += nsigns;
            let (normal, interface) = if surface {
                let v = f[at..at + d].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                let i = f[at + d].trim();
                (Some(v), if i.is_empty() { None } else { Some(i.parse().map_err(|_| Error::Parse(format!("bad index '{i}'")))?) })
            } else {
                (None, None)
            };
            nodes.push(QuadNode { x, w, flux: fl, signs, normal, interface });
        }
        Ok(QuadRule { dims: d, mode, nodes })
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Numerical(format!("cannot write {}: {e}", path.display())))
}
