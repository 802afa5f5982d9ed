//! Mixed moments of characteristic polynomials over SO(2N) and USp(2N),
//! the excised orthogonal ensemble, and the matching predictions for
//! quadratic twists of elliptic-curve L-functions.

pub mod arithmetic;
pub mod charpoly;
pub mod contours;
pub mod error;
pub mod excised;
pub mod haar;
pub mod identities;
pub mod jacobi;
pub mod mc;
pub mod moments;
pub mod parse;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub type C64 = Complex64;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
