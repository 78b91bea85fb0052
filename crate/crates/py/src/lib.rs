//! Python bindings: polynomials, plans, rules and the integral front ends.

use std::cell::RefCell;

use implicitquad::engine::{EngineConfig, Mode, Plan as CorePlan, QuadRule, Schemes};
use implicitquad::{testbed, BoxMap, Error, Scheme, TensorPoly};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(m) => PyArithmeticError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn boxmap(lo: Option<Vec<f64>>, hi: Option<Vec<f64>>, dims: usize) -> PyResult<BoxMap> {
    match (lo, hi) {
        (Some(lo), Some(hi)) => BoxMap::new(lo, hi).map_err(to_py),
        (None, None) => Ok(BoxMap::unit(dims)),
        _ => Err(PyValueError::new_err("give both lo and hi or neither")),
    }
}

fn schemes(s: Option<Vec<String>>) -> PyResult<Schemes> {
    match s {
        None => Ok(Schemes::Auto),
        Some(v) => v
            .iter()
            .map(|n| Scheme::parse(n).ok_or_else(|| PyValueError::new_err(format!("unknown scheme '{n}'"))))
            .collect::<PyResult<Vec<_>>>()
            .map(Schemes::Fixed),
    }
}

fn mode(s: &str) -> PyResult<Mode> {
    Mode::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown mode '{s}'")))
}

/// Calls a Python integrand, remembering the first exception.
struct Integrand<'a, 'py> {
    f: Option<&'a Bound<'py, PyAny>>,
    err: RefCell<Option<PyErr>>,
}

impl<'a, 'py> Integrand<'a, 'py> {
    fn new(f: Option<&'a Bound<'py, PyAny>>) -> Self {
        Integrand { f, err: RefCell::new(None) }
    }

    fn call(&self, x: &[f64]) -> f64 {
        let Some(f) = self.f else { return 1.0 };
        if self.err.borrow().is_some() {
            return 0.0;
        }
        match f.call1((x.to_vec(),)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                *self.err.borrow_mut() = Some(e);
                0.0
            }
        }
    }

    fn finish<T>(self, v: T) -> PyResult<T> {
        match self.err.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }
}

/// Tensor-product Bernstein polynomial on the unit box.
#[pyclass(name = "Poly", frozen, module = "implicitquad")]
struct Poly {
    inner: TensorPoly,
}

#[pymethods]
impl Poly {
    /// Bernstein coefficients, row-major with the last index fastest.
    #[new]
    fn new(degrees: Vec<usize>, coeffs: Vec<f64>) -> PyResult<Self> {
        Ok(Poly { inner: TensorPoly::new(degrees, coeffs).map_err(to_py)? })
    }

    /// Monomial coefficients in user coordinates, pulled back from the box `[lo, hi]`.
    #[staticmethod]
    #[pyo3(signature = (degrees, coeffs, lo=None, hi=None))]
    fn monomial(degrees: Vec<usize>, coeffs: Vec<f64>, lo: Option<Vec<f64>>, hi: Option<Vec<f64>>) -> PyResult<Self> {
        let b = boxmap(lo, hi, degrees.len())?;
        Ok(Poly { inner: b.pull_back_monomial(degrees, coeffs).map_err(to_py)? })
    }

    #[getter]
    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees().to_vec()
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs().to_vec()
    }

    /// Value at a point of the unit box.
    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dims() {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.inner.evaluate(&x))
    }

    fn differentiate(&self, axis: usize) -> PyResult<Poly> {
        if axis >= self.inner.dims() {
            return Err(PyValueError::new_err("axis out of range"));
        }
        Ok(Poly { inner: self.inner.differentiate(axis) })
    }

    fn __repr__(&self) -> String {
        format!("Poly(degrees={:?})", self.inner.degrees())
    }
}

/// A quadrature rule in user coordinates.
#[pyclass(name = "Rule", frozen, module = "implicitquad")]
struct Rule {
    inner: QuadRule,
}

#[pymethods]
impl Rule {
    #[getter]
    fn nodes(&self) -> Vec<Vec<f64>> {
        self.inner.nodes.iter().map(|n| n.x.clone()).collect()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.nodes.iter().map(|n| n.w).collect()
    }

    /// Vector weights of flux rules; empty otherwise.
    #[getter]
    fn flux_weights(&self) -> Vec<Vec<f64>> {
        self.inner.nodes.iter().filter_map(|n| n.flux.clone()).collect()
    }

    #[getter]
    fn signs(&self) -> Vec<Vec<i8>> {
        self.inner.nodes.iter().map(|n| n.signs.clone()).collect()
    }

    #[getter]
    fn normals(&self) -> Vec<Vec<f64>> {
        self.inner.nodes.iter().filter_map(|n| n.normal.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[pyo3(signature = (f=None))]
    fn integrate(&self, f: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
        let g = Integrand::new(f);
        let v = self.inner.integrate(|x| g.call(x));
        g.finish(v)
    }

    #[pyo3(signature = (f=None))]
    fn integrate_flux(&self, f: Option<&Bound<'_, PyAny>>) -> PyResult<Vec<f64>> {
        let g = Integrand::new(f);
        let v = self.inner.integrate_flux(|x| g.call(x));
        g.finish(v)
    }

    /// Nodes whose sign pattern matches; 0 matches either sign.
    fn cluster(&self, pattern: Vec<i8>) -> Rule {
        Rule { inner: self.inner.cluster_by_signs(&pattern) }
    }
}

/// Cached elimination hierarchy, reusable across orders and schemes.
#[pyclass(name = "Plan", frozen, module = "implicitquad")]
struct Plan {
    inner: CorePlan,
}

#[pymethods]
impl Plan {
    #[new]
    #[pyo3(signature = (polys, lo=None, hi=None, mode="volume", simplex=false, masks=true, dims=None))]
    fn new(
        polys: Vec<PyRef<'_, Poly>>,
        lo: Option<Vec<f64>>,
        hi: Option<Vec<f64>>,
        mode: &str,
        simplex: bool,
        masks: bool,
        dims: Option<usize>,
    ) -> PyResult<Self> {
        let d = polys.first().map(|p| p.inner.dims()).or(dims).or(lo.as_ref().map(Vec::len)).unwrap_or(2);
        let b = boxmap(lo, hi, d)?;
        let phis: Vec<TensorPoly> = polys.iter().map(|p| p.inner.clone()).collect();
        let cfg = EngineConfig { mode: self::mode(mode)?, use_masks: masks, ..EngineConfig::default() };
        let inner = if simplex { CorePlan::new_simplex(&phis, &b, &cfg) } else { CorePlan::new(&phis, &b, &cfg) };
        Ok(Plan { inner: inner.map_err(to_py)? })
    }

    #[pyo3(signature = (q, schemes=None))]
    fn rule(&self, py: Python<'_>, q: usize, schemes: Option<Vec<String>>) -> PyResult<Rule> {
        let s = self::schemes(schemes)?;
        let inner = py.detach(|| self.inner.rule(q, &s)).map_err(to_py)?;
        Ok(Rule { inner })
    }

    /// Integral over the nodes matching `pattern` (default: every polynomial negative).
    #[pyo3(signature = (q, f=None, schemes=None, pattern=None))]
    fn integrate(&self, q: usize, f: Option<&Bound<'_, PyAny>>, schemes: Option<Vec<String>>, pattern: Option<Vec<i8>>) -> PyResult<f64> {
        let s = self::schemes(schemes)?;
        let pattern = pattern.unwrap_or_else(|| if self.inner.mode() == Mode::Volume { vec![-1; 64] } else { Vec::new() });
        let g = Integrand::new(f);
        let v = self.inner.integrate(q, &s, &pattern, |x| g.call(x)).map_err(to_py)?;
        g.finish(v)
    }

    #[getter]
    fn axes(&self) -> Vec<usize> {
        self.inner.axes()
    }

    #[getter]
    fn diagnostics(&self) -> Vec<String> {
        self.inner.diagnostics().to_vec()
    }
}

/// Integral of `f` (default 1) where every polynomial is negative.
#[pyfunction]
#[pyo3(signature = (polys, lo=None, hi=None, q=20, schemes=None, f=None))]
fn volume(
    polys: Vec<PyRef<'_, Poly>>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    q: usize,
    schemes: Option<Vec<String>>,
    f: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let plan = Plan::new(polys, lo, hi, "volume", false, true, None)?;
    plan.integrate(q, f, schemes, None)
}

/// Integral of `f` (default 1) over the zero sets.
#[pyfunction]
#[pyo3(signature = (polys, lo=None, hi=None, q=20, schemes=None, f=None))]
fn surface(
    py: Python<'_>,
    polys: Vec<PyRef<'_, Poly>>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    q: usize,
    schemes: Option<Vec<String>>,
    f: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    Plan::new(polys, lo, hi, "surface", false, true, None)?.rule(py, q, schemes)?.integrate(f)
}

/// Flux integral of `f n` over the zero sets, `n` pointing toward positive values.
#[pyfunction]
#[pyo3(signature = (polys, lo=None, hi=None, q=20, schemes=None, f=None))]
fn flux(
    py: Python<'_>,
    polys: Vec<PyRef<'_, Poly>>,
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    q: usize,
    schemes: Option<Vec<String>>,
    f: Option<&Bound<'_, PyAny>>,
) -> PyResult<Vec<f64>> {
    Plan::new(polys, lo, hi, "surface-flux", false, true, None)?.rule(py, q, schemes)?.integrate_flux(f)
}

/// Integral of `f` over the unit simplex intersected with where every polynomial is negative.
#[pyfunction]
#[pyo3(signature = (polys, dims, q=20, schemes=None, f=None))]
fn simplex_volume(polys: Vec<PyRef<'_, Poly>>, dims: usize, q: usize, schemes: Option<Vec<String>>, f: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
    let plan = Plan::new(polys, None, None, "volume", true, true, Some(dims))?;
    plan.integrate(q, f, schemes, None)
}

/// A named fixture as `(poly, lo, hi)`.
#[pyfunction]
fn fixture(name: &str) -> PyResult<(Poly, Vec<f64>, Vec<f64>)> {
    let fx = testbed::fixture(name).ok_or_else(|| PyValueError::new_err(format!("unknown fixture '{name}'")))?;
    Ok((Poly { inner: fx.poly() }, fx.lo.clone(), fx.hi.clone()))
}

#[pyfunction]
fn fixture_names() -> Vec<String> {
    testbed::fixtures().into_iter().map(|f| f.name).collect()
}

#[pymodule]
#[pyo3(name = "implicitquad")]
fn implicitquad_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Poly>()?;
    m.add_class::<Rule>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(volume, m)?)?;
    m.add_function(wrap_pyfunction!(surface, m)?)?;
    m.add_function(wrap_pyfunction!(flux, m)?)?;
    m.add_function(wrap_pyfunction!(simplex_volume, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    Ok(())
}
