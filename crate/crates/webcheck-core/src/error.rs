use std::fmt;

/// Error type shared by all modules of the crate.
///
/// Variants mirror the failure modes of the geometric pipeline: degenerate
/// normalizations, singular loci of the invariant frame, and plain bad input.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-contract input (zero polynomial, empty jet, ...).
    InvalidInput(String),
    /// Evaluation outside the mathematical domain (log of a non-positive jet, ...).
    DomainError(String),
    /// Map has a singular Jacobian at the queried point.
    SingularMap,
    /// Two web slopes coincide at the queried point.
    DegenerateWeb,
    /// S(t0) is 0 or 1, so the Cartan normalization breaks down.
    DegenerateNormalization,
    /// Symmetry direction is tangent to one of the web foliations.
    SymmetryTangent,
    /// Symmetry flow fixes a leaf parameter (c_i = 0) at the base point.
    StationaryOrbit,
    /// Profile is flat: U = 0 identically, so F is undefined.
    FlatWeb,
    /// dX/dt = 0 at the base point (S in {-1, 1/2, 2} or S' = 0).
    StationaryX,
    /// Denominator (S-1)(S-2)(2S-1)(S+1) of V vanishes.
    SingularS,
    /// X = 0 or X = 9/4, where the criterion formulas degenerate.
    SingularX,
    /// 3(4X-9)Z - 4X = 0, the locus incompatible with the Z-system.
    SigmaLocus,
    /// rho(X, F, F') = 0, the degenerate branch of Theorem-style testing.
    RhoLocus,
    /// Leading coefficient E5 or H6 vanished; the 11x11 resultant collapses.
    DegenerateLeadingCoeff,
    /// Row has no printed branch-point polynomial (transcendental reduction).
    NotProvided,
    /// Catalog parameters violate the row's admissibility predicate.
    InvalidParameters(String),
    /// No line of the requested family passes through the point (in window).
    EmptyFamily,
    /// The two fixed lines are parallel; no intersection point exists.
    NoIntersection,
    /// Sample points for the cubic test are degenerate (repeated/collinear).
    InvalidSampling,
    /// Expression parser rejected the input at the given byte offset.
    UnsupportedExpression { offset: usize, message: String },
    /// Numerical root search failed to converge.
    NoConvergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::DomainError(m) => write!(f, "domain error: {m}"),
            Error::SingularMap => write!(f, "singular Jacobian"),
            Error::DegenerateWeb => write!(f, "coincident web slopes"),
            Error::DegenerateNormalization => write!(f, "S(t0) in {{0,1}}: degenerate normalization"),
            Error::SymmetryTangent => write!(f, "symmetry tangent to a web direction"),
            Error::StationaryOrbit => write!(f, "symmetry fixes a leaf parameter at the base"),
            Error::FlatWeb => write!(f, "flat profile: invariant frame undefined"),
            Error::StationaryX => write!(f, "dX/dt = 0 at the base point"),
            Error::SingularS => write!(f, "V denominator vanishes at this S"),
            Error::SingularX => write!(f, "X in {{0, 9/4}}: singular"),
            Error::SigmaLocus => write!(f, "3(4X-9)Z - 4X = 0"),
            Error::RhoLocus => write!(f, "rho(X,F,F') = 0"),
            Error::DegenerateLeadingCoeff => write!(f, "leading coefficient of E or H vanished"),
            Error::NotProvided => write!(f, "no branch polynomial for this row"),
            Error::InvalidParameters(m) => write!(f, "inadmissible parameters: {m}"),
            Error::EmptyFamily => write!(f, "no incident line of this family"),
            Error::NoIntersection => write!(f, "fixed lines are parallel"),
            Error::InvalidSampling => write!(f, "degenerate sampling"),
            Error::UnsupportedExpression { offset, message } => {
                write!(f, "parse error at offset {offset}: {message}")
            }
            Error::NoConvergence(m) => write!(f, "no convergence: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
