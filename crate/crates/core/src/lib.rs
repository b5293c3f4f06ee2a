//! Numerical evaluation of the non-local functionals
//! `F_{gamma,p,lambda}(u, Omega) = lambda^p nu_gamma(E_{gamma,p,lambda}(u, Omega))`
//! and experiment harnesses for their large-`lambda` behaviour.

pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod functional_1d;
pub mod model;
pub mod numerics;
pub mod nu_kernel;
pub mod slicing_nd;

pub use error::{Error, Result};
pub use functional_1d::{Estimate, Evaluator, QuadratureResolution};
pub use model::{Domain1D, Function1D, FunctionalParams};
