//! Numerical laboratory for uniqueness and non-uniqueness of nonlinear
//! Fokker–Planck–Kolmogorov equations `∂_tμ = ∂_x²(a μ) − ∂_x(b μ)` whose
//! coefficients depend on the solution `μ`.

// NaN-rejecting `!(x > 0.0)` checks and index loops over small matrices are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::redundant_guards)]

pub mod adjoint;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod expr;
pub mod families;
pub mod heat;
pub mod measures;
pub mod metrics;
pub mod nonuniqueness;
pub mod particles;
pub mod quadrature;

pub use error::{Error, Result};
pub use expr::ScalarField;
