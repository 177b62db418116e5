use crate::lp::LpError;
use crate::money::Money;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    Shape(String),

    #[error("{kind} index {index} out of range (have {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("assignment for apartment {apartment} is not a bijection onto its rooms")]
    NotBijection { apartment: usize },

    #[error("prices in apartment {apartment} sum to {actual}, rent is {expected}")]
    RentMismatch {
        apartment: usize,
        expected: Box<Money>,
        actual: Box<Money>,
    },

    #[error("invalid negotiation: {0}")]
    InvalidNegotiation(String),

    #[error("not reachable by negotiation: {0}")]
    NotReachable(String),

    #[error("player {player} has nobody to negotiate with")]
    NoTradingPartner { player: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{what} exceeds the enumeration cap of {limit}")]
    ScaleCap { what: &'static str, limit: usize },

    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("objective has no component functions")]
    EmptyObjective,

    #[error("objective is unbounded over the feasible solutions")]
    UnboundedObjective,

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("cannot parse document: {0}")]
    Parse(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("solution document lacks {0}")]
    IncompleteSolution(&'static str),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

pub(crate) fn check_index(kind: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { kind, index, len })
    }
}
