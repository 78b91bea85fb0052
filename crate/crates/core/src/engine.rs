//! Recursive dimension reduction: plans and quadrature rules.
//!
//! A [`Plan`] holds the elimination hierarchy for a set of polynomials. It
//! depends only on the geometry, so one plan serves every order and scheme.

use serde::{Deserialize, Serialize};

use crate::algebraic;
use crate::bernstein::{BoxMap, TensorPoly};
use crate::error::{Error, Result};
use crate::masking::{self, Mask};
use crate::quad1d::{self, Rule1d, Scheme};
use crate::roots1d;

/// Relative size below which derived coefficients of top degree are dropped.
const REDUCE_TOL: f64 = 1e-11;
/// Shortest line interval that receives nodes.
const MIN_INTERVAL: f64 = 1e-12;
/// Smallest normal component allowed for single-direction surface rules.
const MIN_NORMAL_COMPONENT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Volume,
    Surface,
    SurfaceFlux,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "volume" => Some(Mode::Volume),
            "surface" => Some(Mode::Surface),
            "surface-flux" | "flux" => Some(Mode::SurfaceFlux),
            _ => None,
        }
    }
}

/// One-dimensional schemes per level, outermost integral first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schemes {
    Auto,
    Fixed(Vec<Scheme>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub q: usize,
    pub schemes: Schemes,
    pub mode: Mode,
    pub mask_resolution: usize,
    pub use_masks: bool,
    /// Elimination axes by level, top level first; missing entries use the heuristic.
    pub forced_axes: Vec<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            q: 10,
            schemes: Schemes::Auto,
            mode: Mode::Volume,
            mask_resolution: masking::DEFAULT_RESOLUTION,
            use_masks: true,
            forced_axes: Vec::new(),
        }
    }
}

impl EngineConfig {
    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn with_schemes(mut self, s: &[Scheme]) -> Self {
        self.schemes = Schemes::Fixed(s.to_vec());
        self
    }

    pub fn with_mode(mut self, m: Mode) -> Self {
        self.mode = m;
        self
    }
}

#[derive(Debug, Clone)]
struct Masked {
    poly: TensorPoly,
    mask: Mask,
    /// Index of the caller polynomial this came from, for top-level entries.
    origin: Option<usize>,
}

#[derive(Debug, Clone)]
struct Level {
    dim: usize,
    axis: usize,
    polys: Vec<Masked>,
    branch_free: bool,
    /// Integrand of this level's line integrals may have endpoint singularities.
    singular: bool,
    base: Option<Box<Level>>,
}

#[derive(Debug, Clone)]
enum Kind {
    Volume(Level),
    SingleDirection(Level),
    Aggregated(Vec<Level>),
}

/// Elimination hierarchy for a set of polynomials on a box.
#[derive(Debug, Clone)]
pub struct Plan {
    boxmap: BoxMap,
    mode: Mode,
    inputs: Vec<TensorPoly>,
    gradients: Vec<Vec<TensorPoly>>,
    /// Number of caller polynomials; a trailing simplex face follows when present.
    n_user: usize,
    simplex: bool,
    use_masks: bool,
    kind: Kind,
    diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadNode {
    pub x: Vec<f64>,
    pub w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux: Option<Vec<f64>>,
    pub signs: Vec<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interface: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadRule {
    pub dims: usize,
    pub mode: Mode,
    pub nodes: Vec<QuadNode>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.w).sum()
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().map(|n| n.w * f(&n.x)).sum()
    }

    /// Vector integral of `f n` for flux rules.
    pub fn integrate_flux<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        for n in &self.nodes {
            if let Some(v) = &n.flux {
                let fx = f(&n.x);
                for (o, c) in out.iter_mut().zip(v) {
                    *o += fx * c;
                }
            }
        }
        out
    }

    /// Nodes whose sign pattern matches; `0` in the pattern matches any sign.
    pub fn cluster_by_signs(&self, pattern: &[i8]) -> QuadRule {
        QuadRule {
            dims: self.dims,
            mode: self.mode,
            nodes: self
                .nodes
                .iter()
                .filter(|n| n.signs.iter().zip(pattern).all(|(s, p)| *p == 0 || s == p))
                .cloned()
                .collect(),
        }
    }
}

/// Summary of one elimination level, top level first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub dim: usize,
    pub axis: usize,
    pub polys: usize,
    pub degrees: Vec<Vec<usize>>,
    pub branch_free: bool,
}

fn lift(base: &[f64], axis: usize, y: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(base.len() + 1);
    x.extend_from_slice(&base[..axis]);
    x.push(y);
    x.extend_from_slice(&base[axis..]);
    x
}

fn line_coeffs(p: &TensorPoly, axis: usize, base: &[f64]) -> Vec<f64> {
    if p.dims() == 1 {
        p.coeffs().to_vec()
    } else {
        p.line_restrict(axis, base)
    }
}

/// Accepted roots of one polynomial along the line through `base`.
fn masked_roots(p: &Masked, axis: usize, base: &[f64], use_masks: bool, out: &mut Vec<f64>) -> Result<()> {
    let c = line_coeffs(&p.poly, axis, base);
    let noise = if p.origin.is_some() { roots1d::EXACT_NOISE } else { roots1d::DERIVED_NOISE };
    match roots1d::roots_with_noise(&c, noise) {
        Ok(r) => {
            for y in r {
                if !use_masks || p.mask.lookup(&lift(base, axis, y)) {
                    out.push(y);
                }
            }
            Ok(())
        }
        Err(Error::ZeroPolynomial) => Ok(()),
        Err(e) => Err(e),
    }
}

fn gradient_at(grads: &[TensorPoly], x: &[f64]) -> Vec<f64> {
    grads.iter().map(|g| g.evaluate(x)).collect()
}

fn derivative_negligible(d: &TensorPoly, p: &TensorPoly) -> bool {
    d.max_abs() <= 1e-14 * p.max_abs()
}

fn cell_midpoints(mask: &Mask) -> impl Iterator<Item = Vec<f64>> + '_ {
    let m = mask.resolution() as f64;
    mask.bits()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(move |(i, _)| mask.cell(i).iter().map(|&c| (c as f64 + 0.5) / m).collect())
}

struct Builder<'a> {
    opts: &'a EngineConfig,
    diagnostics: Vec<String>,
}

impl Builder<'_> {
    fn refine(&self, polys: Vec<Masked>) -> Vec<Masked> {
        polys
            .into_iter()
            .filter_map(|p| {
                if !self.opts.use_masks {
                    return Some(p);
                }
                let mask = masking::nonzero_mask(&p.poly, &p.mask);
                if mask.is_empty() {
                    None
                } else {
                    Some(Masked { mask, ..p })
                }
            })
            .collect()
    }

    fn branch_masks(&self, polys: &[Masked], k: usize) -> Vec<Option<Mask>> {
        polys
            .iter()
            .map(|p| {
                let d = p.poly.differentiate(k);
                if derivative_negligible(&d, &p.poly) {
                    return None;
                }
                Some(if self.opts.use_masks {
                    masking::intersection_mask(&p.poly, &p.mask, &d, &p.mask)
                } else {
                    p.mask.clone()
                })
            })
            .collect()
    }

    fn score(&self, polys: &[Masked], k: usize) -> f64 {
        let mut s = 0.0;
        for p in polys {
            let grads = p.poly.gradient();
            for x in cell_midpoints(&p.mask) {
                let g = gradient_at(&grads, &x);
                let n1: f64 = g.iter().map(|v| v.abs()).sum();
                if n1 > 0.0 {
                    s += g[k].abs() / n1;
                }
            }
        }
        s
    }

    fn choose_axis(&self, polys: &[Masked], dim: usize) -> (usize, Vec<Option<Mask>>, bool) {
        let masks: Vec<Vec<Option<Mask>>> = (0..dim).map(|k| self.branch_masks(polys, k)).collect();
        let free: Vec<bool> = (0..dim)
            .map(|k| {
                self.opts.use_masks
                    && polys.iter().zip(&masks[k]).all(|(p, m)| match m {
                        Some(m) => m.is_empty(),
                        // independent of x_k: lines never cross the interface transversally
                        None => p.poly.degrees()[k] == 0 || p.poly.is_zero(),
                    })
            })
            .collect();
        let candidates: Vec<usize> = if free.iter().any(|&f| f) {
            (0..dim).filter(|&k| free[k]).collect()
        } else {
            (0..dim).collect()
        };
        let scores: Vec<f64> = candidates.iter().map(|&k| self.score(polys, k)).collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tie = 1e-12 * best.abs().max(1e-300);
        let pick = candidates
            .iter()
            .zip(&scores)
            .find(|(_, &s)| s >= best - tie)
            .map(|(&k, _)| k)
            .unwrap_or(0);
        let bf = free[pick];
        (pick, masks.into_iter().nth(pick).unwrap(), bf)
    }

    fn push_derived(&mut self, psi: &mut Vec<Masked>, r: Result<TensorPoly>, mask: Mask, depth: usize, what: &str) -> Result<()> {
        match r {
            Ok(p) => {
                psi.push(Masked { poly: p.reduce_degree(REDUCE_TOL), mask, origin: None });
                Ok(())
            }
            Err(Error::Degenerate(msg)) if depth > 0 => {
                self.diagnostics.push(format!("level {depth}: {what} skipped ({msg})"));
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn build(&mut self, polys: Vec<Masked>, dim: usize, forced: &[usize], depth: usize, singular: bool, forced_here: Option<usize>) -> Result<Level> {
        let polys = self.refine(polys);
        if dim == 1 {
            return Ok(Level { dim, axis: 0, polys, branch_free: true, singular, base: None });
        }
        let forced_axis = forced_here.or(forced.first().copied());
        let (k, bmasks, branch_free) = match forced_axis {
            Some(k) => {
                if k >= dim {
                    return Err(Error::InvalidArgument(format!("forced axis {k} out of range for dimension {dim}")));
                }
                let m = self.branch_masks(&polys, k);
                let bf = self.opts.use_masks
                    && polys.iter().zip(&m).all(|(p, m)| match m {
                        Some(m) => m.is_empty(),
                        None => p.poly.degrees()[k] == 0 || p.poly.is_zero(),
                    });
                (k, m, bf)
            }
            None => self.choose_axis(&polys, dim),
        };
        let m = self.opts.mask_resolution;
        let mut psi: Vec<Masked> = Vec::new();
        for p in &polys {
            for upper in [false, true] {
                let face = p.poly.face_restrict(k, upper);
                if face.is_zero() || face.max_abs() <= 1e-15 * p.poly.max_abs() {
                    self.diagnostics.push(format!("level {depth}: polynomial vanishes on face x{k}={}", upper as u8));
                    continue;
                }
                let fmask = p.mask.face_restriction(k, upper);
                let mask = if self.opts.use_masks { masking::nonzero_mask(&face, &fmask) } else { Mask::full(dim - 1, m) };
                if !mask.is_empty() {
                    psi.push(Masked { poly: face.reduce_degree(REDUCE_TOL), mask, origin: None });
                }
            }
        }
        for (p, bm) in polys.iter().zip(&bmasks) {
            let Some(bm) = bm else { continue };
            if bm.is_empty() {
                continue;
            }
            let r = algebraic::pseudo_discriminant(&p.poly, k);
            let mask = if self.opts.use_masks { bm.collapse(k) } else { Mask::full(dim - 1, m) };
            self.push_derived(&mut psi, r, mask, depth, "discriminant")?;
        }
        for i in 0..polys.len() {
            for j in (i + 1)..polys.len() {
                let (a, b) = (&polys[i], &polys[j]);
                if a.poly.degrees()[k] == 0 && b.poly.degrees()[k] == 0 {
                    continue;
                }
                let im = if self.opts.use_masks {
                    masking::intersection_mask(&a.poly, &a.mask, &b.poly, &b.mask)
                } else {
                    Mask::full(dim, m)
                };
                if im.is_empty() {
                    continue;
                }
                let r = algebraic::resultant(&a.poly, &b.poly, k);
                let mask = if self.opts.use_masks { im.collapse(k) } else { Mask::full(dim - 1, m) };
                self.push_derived(&mut psi, r, mask, depth, "resultant")?;
            }
        }
        let rest = if forced.is_empty() { forced } else { &forced[1..] };
        let base = self.build(psi, dim - 1, rest, depth + 1, !branch_free, None)?;
        Ok(Level { dim, axis: k, polys, branch_free, singular, base: Some(Box::new(base)) })
    }
}

impl Plan {
    pub fn new(phis: &[TensorPoly], boxmap: &BoxMap, cfg: &EngineConfig) -> Result<Plan> {
        Plan::build(phis, boxmap, cfg, false)
    }

    /// Plan restricted to the simplex image of `{x >= 0, sum x <= 1}` in the box.
    pub fn new_simplex(phis: &[TensorPoly], boxmap: &BoxMap, cfg: &EngineConfig) -> Result<Plan> {
        Plan::build(phis, boxmap, cfg, true)
    }

    fn build(phis: &[TensorPoly], boxmap: &BoxMap, cfg: &EngineConfig, simplex: bool) -> Result<Plan> {
        let d = boxmap.dims();
        if cfg.q == 0 {
            return Err(Error::InvalidArgument("quadrature order must be positive".into()));
        }
        for p in phis {
            if p.dims() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dims() });
            }
            if p.is_zero() {
                return Err(Error::Degenerate("input polynomial is identically zero".into()));
            }
        }
        if let Schemes::Fixed(s) = &cfg.schemes {
            let needed = if cfg.mode == Mode::Volume { d } else { d.saturating_sub(1).max(1) };
            if s.len() < needed {
                return Err(Error::InvalidArgument(format!("need {needed} schemes, got {}", s.len())));
            }
        }
        Mask::new(d, cfg.mask_resolution, true)?;
        let mut inputs: Vec<TensorPoly> = phis.iter().map(|p| p.reduce_degree(REDUCE_TOL)).collect();
        if simplex {
            let mut mono = vec![0.0; 1 << d];
            mono[0] = -1.0;
            for k in 0..d {
                mono[1 << (d - 1 - k)] = 1.0;
            }
            inputs.push(TensorPoly::from_monomial(vec![1; d], mono)?);
        }
        let m = cfg.mask_resolution;
        let top: Vec<Masked> = inputs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut mask = Mask::full(d, m);
                if simplex && i < phis.len() {
                    for c in 0..mask.bits().len() {
                        let cell = mask.cell(c);
                        if cell.iter().sum::<usize>() >= m {
                            mask.set(&cell, false);
                        }
                    }
                }
                Masked { poly: p.clone(), mask, origin: Some(i) }
            })
            .collect();
        let mut b = Builder { opts: cfg, diagnostics: Vec::new() };
        let kind = match cfg.mode {
            Mode::Volume => Kind::Volume(b.build(top, d, &cfg.forced_axes, 0, false, None)?),
            Mode::Surface => {
                let level = b.build(top.clone(), d, &cfg.forced_axes, 0, false, None)?;
                if d == 1 || (level.branch_free && normal_check(&level, boxmap)) {
                    Kind::SingleDirection(level)
                } else {
                    let mut levels = Vec::with_capacity(d);
                    for k in 0..d {
                        levels.push(b.build(top.clone(), d, &[], 0, false, Some(k))?);
                    }
                    Kind::Aggregated(levels)
                }
            }
            Mode::SurfaceFlux => {
                let mut levels = Vec::with_capacity(d);
                for k in 0..d {
                    levels.push(b.build(top.clone(), d, &[], 0, false, Some(k))?);
                }
                Kind::Aggregated(levels)
            }
        };
        let gradients = inputs.iter().map(|p| p.gradient()).collect();
        Ok(Plan {
            boxmap: boxmap.clone(),
            mode: cfg.mode,
            inputs,
            gradients,
            n_user: phis.len(),
            simplex,
            use_masks: cfg.use_masks,
            kind,
            diagnostics: b.diagnostics,
        })
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn boxmap(&self) -> &BoxMap {
        &self.boxmap
    }

    /// True when the surface rule uses a single height direction.
    pub fn single_direction(&self) -> bool {
        matches!(self.kind, Kind::SingleDirection(_))
    }

    /// Levels of the (first) elimination hierarchy, top level first.
    pub fn levels(&self) -> Vec<LevelInfo> {
        let top = match &self.kind {
            Kind::Volume(l) | Kind::SingleDirection(l) => l,
            Kind::Aggregated(ls) => &ls[0],
        };
        let mut out = Vec::new();
        let mut cur = Some(top);
        while let Some(l) = cur {
            out.push(LevelInfo {
                dim: l.dim,
                axis: l.axis,
                polys: l.polys.len(),
                degrees: l.polys.iter().map(|p| p.poly.degrees().to_vec()).collect(),
                branch_free: l.branch_free,
            });
            cur = l.base.as_deref();
        }
        out
    }

    /// Elimination axes from the top level down.
    pub fn axes(&self) -> Vec<usize> {
        self.levels().iter().filter(|l| l.dim > 1).map(|l| l.axis).collect()
    }

    /// Refined masks of the top-level polynomials.
    pub fn top_masks(&self) -> Vec<Mask> {
        let top = match &self.kind {
            Kind::Volume(l) | Kind::SingleDirection(l) => l,
            Kind::Aggregated(ls) => &ls[0],
        };
        top.polys.iter().map(|p| p.mask.clone()).collect()
    }

    fn scheme(&self, level: &Level, q: usize, schemes: &Schemes) -> Scheme {
        match schemes {
            Schemes::Fixed(s) => s[level.dim - 1],
            Schemes::Auto => {
                if level.singular && q > 10 {
                    Scheme::TanhSinh
                } else {
                    Scheme::GaussLegendre
                }
            }
        }
    }

    fn signs_at(&self, x: &[f64]) -> Vec<i8> {
        self.inputs
            .iter()
            .map(|p| {
                let v = p.evaluate(x);
                if v > 0.0 {
                    1
                } else if v < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect()
    }

    /// Visits every node of the volume rule in reference coordinates.
    fn visit_volume(&self, level: &Level, q: usize, schemes: &Schemes, top: bool, emit: &mut dyn FnMut(&[f64], f64, Option<Vec<i8>>)) -> Result<()> {
        let rule = quad1d::rule(self.scheme(level, q, schemes), q);
        match &level.base {
            None => self.line_nodes(level, &[], 1.0, &rule, top, emit),
            Some(base) => {
                let mut err = None;
                self.visit_volume(base, q, schemes, false, &mut |x, w, _| {
                    if err.is_none() {
                        if let Err(e) = self.line_nodes(level, x, w, &rule, top, emit) {
                            err = Some(e);
                        }
                    }
                })?;
                err.map_or(Ok(()), Err)
            }
        }
    }

    fn line_nodes(&self, level: &Level, base: &[f64], w: f64, rule: &Rule1d, top: bool, emit: &mut dyn FnMut(&[f64], f64, Option<Vec<i8>>)) -> Result<()> {
        let k = level.axis;
        let mut breaks = vec![0.0];
        for p in &level.polys {
            masked_roots(p, k, base, self.use_masks, &mut breaks)?;
        }
        breaks.push(1.0);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for iv in breaks.windows(2) {
            let (a, b) = (iv[0], iv[1]);
            if b - a <= MIN_INTERVAL {
                continue;
            }
            let signs = if top { Some(self.signs_at(&lift(base, k, 0.5 * (a + b)))) } else { None };
            for (y, wy) in rule.map_to(a, b) {
                emit(&lift(base, k, y), w * wy, signs.clone());
            }
        }
        Ok(())
    }

    fn volume_rule(&self, level: &Level, q: usize, schemes: &Schemes) -> Result<QuadRule> {
        let vol = self.boxmap.volume();
        let mut nodes = Vec::new();
        let n_user = self.n_user;
        let simplex = self.simplex;
        self.visit_volume(level, q, schemes, true, &mut |x, w, signs| {
            let mut signs = signs.unwrap_or_default();
            if simplex {
                if signs[n_user] > 0 {
                    return;
                }
                signs.truncate(n_user);
            }
            nodes.push(QuadNode { x: self.boxmap.to_user(x), w: w * vol, flux: None, signs, normal: None, interface: None });
        })?;
        Ok(QuadRule { dims: self.boxmap.dims(), mode: Mode::Volume, nodes })
    }

    fn surface_rule(&self, level: &Level, q: usize, schemes: &Schemes, style: SurfaceStyle, nodes: &mut Vec<QuadNode>) -> Result<()> {
        let k = level.axis;
        let d = self.boxmap.dims();
        let extents: Vec<f64> = (0..d).map(|l| self.boxmap.extent(l)).collect();
        let base_scale: f64 = (0..d).filter(|&l| l != k).map(|l| extents[l]).product();
        let mut emit_point = |x: &[f64], w: f64| -> Result<()> {
            for p in &level.polys {
                let Some(idx) = p.origin else { continue };
                if idx >= self.n_user {
                    continue;
                }
                let mut ys = Vec::new();
                masked_roots(p, k, x, self.use_masks, &mut ys)?;
                for y in ys {
                    let t = if d == 1 { vec![y] } else { lift(x, k, y) };
                    if self.simplex && self.inputs[self.n_user].evaluate(&t) > 0.0 {
                        continue;
                    }
                    let g: Vec<f64> = gradient_at(&self.gradients[idx], &t)
                        .iter()
                        .zip(&extents)
                        .map(|(v, s)| v / s)
                        .collect();
                    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if gn == 0.0 || g[k] == 0.0 {
                        continue;
                    }
                    let normal: Vec<f64> = g.iter().map(|v| v / gn).collect();
                    let wb = w * base_scale;
                    let (weight, flux) = match style {
                        SurfaceStyle::Single => (wb * gn / g[k].abs(), None),
                        SurfaceStyle::Component => (wb * g[k].abs() / gn, None),
                        SurfaceStyle::Flux => {
                            let mut v = vec![0.0; d];
                            v[k] = wb * g[k].signum();
                            (wb, Some(v))
                        }
                    };
                    if !(weight > 0.0) {
                        continue;
                    }
                    let mut signs = self.signs_at(&t);
                    signs.truncate(self.n_user);
                    signs[idx] = 0;
                    nodes.push(QuadNode {
                        x: self.boxmap.to_user(&t),
                        w: weight,
                        flux,
                        signs,
                        normal: Some(normal),
                        interface: Some(idx),
                    });
                }
            }
            Ok(())
        };
        match &level.base {
            None => emit_point(&[], 1.0),
            Some(base) => {
                let mut err = None;
                self.visit_volume(base, q, schemes, false, &mut |x, w, _| {
                    if err.is_none() {
                        if let Err(e) = emit_point(x, w) {
                            err = Some(e);
                        }
                    }
                })?;
                err.map_or(Ok(()), Err)
            }
        }
    }

    /// Quadrature rule of order `q` for the plan's mode.
    pub fn rule(&self, q: usize, schemes: &Schemes) -> Result<QuadRule> {
        if q == 0 {
            return Err(Error::InvalidArgument("quadrature order must be positive".into()));
        }
        let d = self.boxmap.dims();
        match &self.kind {
            Kind::Volume(l) => self.volume_rule(l, q, schemes),
            Kind::SingleDirection(l) => {
                let mut nodes = Vec::new();
                self.surface_rule(l, q, schemes, SurfaceStyle::Single, &mut nodes)?;
                Ok(QuadRule { dims: d, mode: self.mode, nodes })
            }
            Kind::Aggregated(levels) => {
                let style = if self.mode == Mode::SurfaceFlux { SurfaceStyle::Flux } else { SurfaceStyle::Component };
                let mut nodes = Vec::new();
                for l in levels {
                    self.surface_rule(l, q, schemes, style, &mut nodes)?;
                }
                Ok(QuadRule { dims: d, mode: self.mode, nodes })
            }
        }
    }

    /// Integral of `f` weighted by the rule, without materialising nodes for volume plans.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, q: usize, schemes: &Schemes, pattern: &[i8], f: F) -> Result<f64> {
        match &self.kind {
            Kind::Volume(l) => {
                let vol = self.boxmap.volume();
                let mut sum = 0.0;
                let n_user = self.n_user;
                let simplex = self.simplex;
                self.visit_volume(l, q, schemes, true, &mut |x, w, signs| {
                    let signs = signs.unwrap_or_default();
                    if simplex && signs[n_user] > 0 {
                        return;
                    }
                    if signs.iter().zip(pattern).all(|(s, p)| *p == 0 || s == p) {
                        sum += w * f(&self.boxmap.to_user(x));
                    }
                })?;
                Ok(sum * vol)
            }
            _ => Ok(self.rule(q, schemes)?.cluster_by_signs(pattern).integrate(f)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SurfaceStyle {
    Single,
    Component,
    Flux,
}

fn normal_check(level: &Level, boxmap: &BoxMap) -> bool {
    let k = level.axis;
    let mut min = f64::INFINITY;
    for p in &level.polys {
        let grads = p.poly.gradient();
        for x in cell_midpoints(&p.mask) {
            let g: Vec<f64> = gradient_at(&grads, &x).iter().enumerate().map(|(l, v)| v / boxmap.extent(l)).collect();
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn > 0.0 {
                min = min.min(g[k].abs() / gn);
            }
        }
    }
    min >= MIN_NORMAL_COMPONENT
}

/// Integral of `f` over the region where every `phi_i < 0`.
pub fn integrate_volume<F: Fn(&[f64]) -> f64>(phis: &[TensorPoly], boxmap: &BoxMap, cfg: &EngineConfig, f: F) -> Result<f64> {
    let cfg = EngineConfig { mode: Mode::Volume, ..cfg.clone() };
    let plan = Plan::new(phis, boxmap, &cfg)?;
    plan.integrate(cfg.q, &cfg.schemes, &vec![-1; phis.len()], f)
}

/// Rule for the mode in `cfg`.
pub fn build_rule(phis: &[TensorPoly], boxmap: &BoxMap, cfg: &EngineConfig) -> Result<QuadRule> {
    Plan::new(phis, boxmap, cfg)?.rule(cfg.q, &cfg.schemes)
}

/// Integral of `f` over the union of the zero sets.
pub fn integrate_surface<F: Fn(&[f64]) -> f64>(phis: &[TensorPoly], boxmap: &BoxMap, cfg: &EngineConfig, f: F) -> Result<f64> {
    let cfg = EngineConfig { mode: Mode::Surface, ..cfg.clone() };
    Ok(build_rule(phis, boxmap, &cfg)?.integrate(f))
}

/// Flux integral of `f n` over the zero sets, `n` pointing toward `phi > 0`.
pub fn integrate_flux<F: Fn(&[f64]) -> f64>(phis: &[TensorPoly], boxmap: &BoxMap, cfg: &EngineConfig, f: F) -> Result<Vec<f64>> {
    let cfg = EngineConfig { mode: Mode::SurfaceFlux, ..cfg.clone() };
    Ok(build_rule(phis, boxmap, &cfg)?.integrate_flux(f))
}

/// Integral of `f` over `{phi_i < 0 for all i}` intersected with the unit simplex.
pub fn simplex_volume<F: Fn(&[f64]) -> f64>(phis: &[TensorPoly], dims: usize, cfg: &EngineConfig, f: F) -> Result<f64> {
    let cfg = EngineConfig { mode: Mode::Volume, ..cfg.clone() };
    let plan = Plan::new_simplex(phis, &BoxMap::unit(dims), &cfg)?;
    plan.integrate(cfg.q, &cfg.schemes, &vec![-1; phis.len()], f)
}
