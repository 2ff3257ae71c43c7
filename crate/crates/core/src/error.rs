use alloc::string::String;

use crate::triangle::TriangleIndex;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("({n}, {k}) is not a vertex of the triangle")]
    InvalidVertex { n: usize, k: i64 },

    #[error("{from} and {to} are not adjacent")]
    NotAdjacent { from: TriangleIndex, to: TriangleIndex },

    #[error("k = {k} is outside 0..{n} for row {n}")]
    KOutOfRange { n: usize, k: i64 },

    #[error("row {n} exceeds the enumeration bound {max}")]
    TooLarge { n: usize, max: usize },

    #[error("Eulerian table holds rows up to {have}, row {need} requested")]
    TableTooSmall { have: usize, need: usize },

    #[error("kappa = {kappa} exceeds the configured cap {cap}")]
    KappaAboveCap { kappa: usize, cap: usize },

    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("malformed path: {0}")]
    MalformedPath(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
