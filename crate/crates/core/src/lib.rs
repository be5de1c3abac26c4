//! Exact time-domain non-reflecting boundary kernels for Maxwell's equations
//! on a sphere, and a vector-spherical-harmonic spectral-element simulator for
//! a Drude-dispersive spherical cloak.

mod dd;
mod exact;
pub mod cloaksim;
pub mod config;
pub mod convolve;
pub mod drude;
pub mod error;
pub mod incident;
pub mod linalg;
pub mod newmark;
pub mod nrbk;
pub mod output;
pub mod quadrature;
pub mod sem1d;
pub mod specfun;
pub mod vsh;

pub use error::{Error, Result};
