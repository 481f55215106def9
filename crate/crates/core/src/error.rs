use thiserror::Error;

use crate::model::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("points {first} and {second} are identical")]
    DuplicatePoints { first: NodeId, second: NodeId },

    #[error("non-finite distance between nodes {from} and {to}")]
    NonFiniteDistance { from: NodeId, to: NodeId },

    /// The distance oracle broke `D(x, x) = 0` or `D(x, y) > 0` for distinct points.
    #[error("distance oracle violated identity/positivity at ({from}, {to}): {value}")]
    InvalidDistance {
        from: NodeId,
        to: NodeId,
        value: f64,
    },

    #[error("{what} = {value} is out of range ({expected})")]
    OutOfRange {
        what: &'static str,
        value: String,
        expected: String,
    },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid point set: {0}")]
    InvalidPoints(String),

    #[error("operation requires a sign-vector point set")]
    WrongKind,

    #[error("point set is not the hub instance: {0}")]
    WrongInstance(String),

    #[error("neighborhoods require {sum_required} edges but no pair of neighborhoods overlaps")]
    DegenerateHoods { sum_required: u64 },

    /// Greedy search visited more than `n` nodes, which the tie rule makes impossible.
    #[error("greedy route exceeded {n} nodes from start {start}")]
    RouteOverflow { start: NodeId, n: usize },

    #[error("graph has not been verified navigable")]
    Unverified,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        expected: impl ToString,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            expected: expected.to_string(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
