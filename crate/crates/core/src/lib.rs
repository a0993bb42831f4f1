//! Fundamental solutions, full solutions and fractional moments of the
//! space-time fractional reaction-diffusion equation
//!
//! ```text
//! D_t^{mu,nu} N = eta D_x^{alpha,theta} N + phi(x, t)
//! ```
//!
//! with a Hilfer time derivative of order `mu` and type `nu` and a
//! Riesz-Feller space derivative of order `alpha` and skewness `theta`.
//!
//! The Green function is available through three independent routes that
//! validate each other: inverse Fourier quadrature ([`green_fourier`]),
//! explicit power series and closed forms ([`green_series`]) and a
//! Mellin-Barnes contour integral ([`mellin_barnes`]).

pub mod error;
pub mod eval;
pub mod field;
pub mod green_fourier;
pub mod green_series;
pub mod mellin_barnes;
pub mod mittag_leffler;
pub mod moments;
pub mod params;
pub mod quad;
pub mod rf_symbol;
pub mod solver;
pub mod special;
pub mod validation;

pub use error::{ConstraintViolation, FracError, Result};
pub use params::{AnyParams, DiffusionParams, MultiTermParams, QuadratureConfig, SpaceTerm};
