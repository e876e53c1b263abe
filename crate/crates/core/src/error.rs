//! Error type shared by all modules of the crate.

use crate::algebra::{VarId, VariableSet};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A moment of total degree beyond the functional's degree bound was requested.
    #[error("moment of degree {requested} exceeds the available degree {available}")]
    DegreeExceeded { requested: u32, available: u32 },

    /// A tabulated functional has no entry for the requested multi-index.
    /// Missing moments are never extrapolated to zero.
    #[error("moment table has no entry for {index} (within the degree bound)")]
    MissingMoment { index: String },

    /// The functional was restricted to a variable set that does not support
    /// the requested multi-index.
    #[error("multi-index {index} is not supported in the restriction scope {scope}")]
    OutOfScope { index: String, scope: VariableSet },

    /// A polynomial was evaluated at a point missing one of its variables.
    #[error("point has no coordinate for variable x{var}")]
    MissingCoordinate { var: VarId },

    #[error("invalid functional: {0}")]
    InvalidFunctional(String),

    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },

    /// Flat extension failed: rank M_n != rank M_{n-1}. Raising the order may help.
    #[error("moment matrix of order {order} is not flat (rank {rank_n} vs {rank_n_minus_1} at order {})", order.saturating_sub(1))]
    NotFlat {
        order: u32,
        rank_n: usize,
        rank_n_minus_1: usize,
    },

    /// Atom extraction produced a measure whose moments do not reproduce the
    /// input within tolerance.
    #[error("extraction is ill-conditioned: {detail} (residual {residual:.3e})")]
    IllConditioned { detail: String, residual: f64 },

    #[error("{child} is not a subset of {parent}")]
    NotASubset {
        child: VariableSet,
        parent: VariableSet,
    },

    /// A projective-family operation referenced an index the family does not cover.
    #[error("no index in the family contains {base}")]
    BaseNotCovered { base: VariableSet },

    #[error("family is missing the marginal on {index}")]
    MissingMarginal { index: VariableSet },

    /// The materialized index list is not closed under pairwise union.
    #[error("index list is not directed: union of {left} and {right} is missing")]
    NotDirected {
        left: VariableSet,
        right: VariableSet,
    },

    /// Pushforward compatibility failed on a covering pair while sealing.
    #[error("exactness violated on pair ({small}, {large}): discrepancy {discrepancy:.3e} > {tolerance:.3e}")]
    ExactnessViolation {
        small: VariableSet,
        large: VariableSet,
        discrepancy: f64,
        tolerance: f64,
    },

    /// The requested evaluation is not available for a closed-form marginal.
    #[error("unsupported operation on a closed-form marginal: {0}")]
    UnsupportedMarginal(String),

    /// A negative or inconsistently vanishing even moment; no measure has such data.
    #[error("even moment L(x{var}^{power}) = {value} is invalid")]
    InvalidEvenMoment { var: VarId, power: u32, value: f64 },

    #[error("radius schedule is missing variable x{var}")]
    ScheduleIncomplete { var: VarId },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cylinder predicate uses variables outside the base {base}")]
    PredicateOutsideBase { base: VariableSet },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed bundle: {0}")]
    Bundle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
