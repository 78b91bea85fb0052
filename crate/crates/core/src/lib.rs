//! Quadrature rules for domains and interfaces implicitly defined by
//! multivariate polynomials in tensor-product Bernstein form.

pub mod algebraic;
pub mod bernstein;
pub mod engine;
pub mod error;
pub mod io;
pub mod masking;
pub mod quad1d;
pub mod roots1d;
pub mod testbed;

pub use bernstein::{BoxMap, TensorPoly};
pub use error::{Error, Result};
pub use masking::Mask;
pub use quad1d::Scheme;
