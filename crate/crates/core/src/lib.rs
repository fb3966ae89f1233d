//! Robust rotation registration under outlier corruption.
//!
//! Given paired point sets `{x_i}`, `{y_i}` where a fraction `p` of the pairs
//! has been replaced by independent draws, the crate estimates the rotation
//! `R0` with `y_i = R0 x_i` on the clean pairs by minimizing the least
//! unsquared deviation `L(A) = (1/N) sum_i |A x_i - y_i|` over
//!
//! * `SO(d)` with a Riemannian subgradient method ([`solvers::solve_lud_so`]),
//! * `conv SO(d)` with projected subgradient ([`solvers::solve_lud_conv_so`]),
//! * all of `R^{d x d}` with reweighted least squares
//!   ([`solvers::solve_lud_unconstrained`]),
//!
//! and compares them with the closed-form least-squares (Wahba) estimate.
//! [`analysis`] holds the closed-form predictions (corruption threshold,
//! failure witness, convergence time) and [`experiment`] runs the recovery
//! phase grids and initialization envelopes.

pub mod analysis;
pub mod cost;
pub mod datamodel;
mod error;
pub mod experiment;
mod linalg;
pub mod numeric;
pub mod sogeom;
pub mod solvers;

pub use error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
