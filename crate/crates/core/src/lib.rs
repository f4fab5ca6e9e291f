//! Weighted Steklov eigenvalue problems on planar domains, flat annuli and
//! the flat Möbius band, with tools for optimizing normalized eigenvalues
//! over boundary densities.
//!
//! Every numeric type is generic over a [`Real`] scalar (`f64` or `f32`);
//! the aliases at the crate root fix the scalar to `f64`.

// Negated comparisons deliberately treat NaN as invalid input.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod curve_bem;
pub mod degeneration;
pub mod ellipse;
pub mod error;
pub mod exact_dtn;
pub mod functionals;
pub mod linalg;
pub mod optimize;
pub mod scalar;
pub mod spectrum;
pub mod trace;
pub mod weighted_eig;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TrigPoly = trace::TrigPolynomial<f64>;
pub type Weight = trace::BoundaryWeight<f64>;
pub type Spec = spectrum::Spectrum<f64>;
pub type DomainF64 = exact_dtn::Domain<f64>;
pub type CurveF64 = curve_bem::Curve<f64>;
