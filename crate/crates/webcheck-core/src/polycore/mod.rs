//! Exact rational arithmetic, sparse multivariate polynomials with resultants,
//! and truncated Taylor jets in one and two variables. Everything else in the
//! crate is built on these.

mod jet;
mod jet2;
mod poly;
mod rational;
mod scalar;

pub use jet::{implicit_jet_solve, newton_f64, Jet1};
pub use jet2::Jet2;
pub use poly::{
    bareiss_determinant, discriminant, euclid_remainder, sylvester_matrix, sylvester_resultant,
    MultiPoly, PolyRing,
};
pub use rational::Rational;
pub use scalar::{RingElem, Scalar};
