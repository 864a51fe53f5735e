//! webcheck-core: linearizability of planar 3-webs with a one-parameter
//! infinitesimal symmetry, decided by an exact resultant criterion, plus the
//! full catalog of non-flat symmetric linear 3-webs with verifiable web
//! equations, symmetry reductions and flatness tests.
//!
//! Module map:
//! - [`polycore`]: rationals, sparse polynomials, resultants, Taylor jets.
//! - [`schwarzian`]: projective differential invariants of plane maps and the
//!   associated linearizability residuals.
//! - [`catalog`]: the classified normal forms, their focal curves, web
//!   equations, reductions and flatness tests.
//! - [`symweb`]: Cartan-normalized profiles S(t), invariant frames, the
//!   symmetric-group action and the ODE machinery.
//! - [`criterion`]: the degree-5/degree-6 polynomial pair, the resultant
//!   invariant and the linearizability verdict.

pub mod catalog;
pub mod criterion;
mod error;
pub mod polycore;
pub mod schwarzian;
pub mod symweb;

pub use error::{Error, Result};
