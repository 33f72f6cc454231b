//! Orthogonal polynomials of the q-Normal family: q-Hermite, Al-Salam-Chihara,
//! Rogers and Chebyshev polynomials, the densities that orthogonalize them,
//! exact connection coefficients, density expansions and a rejection sampler.

pub mod cli;
pub mod connect;
pub mod densities;
pub mod error;
pub mod expand;
pub mod polyfam;
pub mod qcore;
pub mod quadrature;
pub mod sampler;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use polyfam::{ExactFamily, Family, FamilyId, Poly, RationalPoly};
pub use scalar::{Rational, Scalar};
