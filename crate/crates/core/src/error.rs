use thiserror::Error;

use crate::padic2::SquareClass2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An input lies outside the domain of a p-adic predicate (usually zero).
    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("quaternions belong to different algebras")]
    ParamsMismatch,

    #[error("invalid algebra parameters: {0}")]
    InvalidParams(String),

    #[error("quaternion is not pure")]
    NotPure,

    #[error("quaternion is not integral")]
    NotIntegral,

    #[error("no pure quaternion has norm in the class of {0}")]
    Unrepresentable(SquareClass2),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{0} is not squarefree")]
    NotSquarefree(i64),

    #[error("search bound exponent {0} outside 1..=16")]
    BoundOutOfRange(u32),

    #[error("bound 2^{bound} is not theorem-backed for this instance; an empty scan proves nothing")]
    UnjustifiedBound { bound: u32 },

    #[error("search aborted after covering {covered} of {total} candidates")]
    Aborted { covered: u128, total: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
