//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, divisor operations, and the
/// hyperelliptic/theta machinery.
///
/// The CLI maps these onto exit codes: parse failures exit 1, violated
/// preconditions exit 2, and internal assertion failures exit 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad JSON, bad rational syntax, unknown names,
    /// nonpositive lengths, disconnected or empty graphs.
    #[error("parse error: {0}")]
    Parse(String),

    /// A point that does not lie on the graph in question.
    #[error("point not on graph: {0}")]
    PointNotOnGraph(String),

    /// Piecewise-linear slope data that assigns conflicting values to some
    /// vertex, or malformed breakpoint lists.
    #[error("discontinuous slope data: {0}")]
    Discontinuous(String),

    /// Operation requires genus at least `need`.
    #[error("genus {got} is below the required minimum {need}")]
    GenusTooSmall { need: usize, got: usize },

    /// Operation requires a bridgeless graph.
    #[error("graph has bridges ({0}); contract them first")]
    HasBridges(String),

    /// Operation requires a minimal graph (no 1-valent vertices).
    #[error("graph is not minimal: vertex {0} has valence 1")]
    NotMinimal(String),

    /// The graph admits no involution with a tree quotient.
    #[error("graph is not hyperelliptic")]
    NotHyperelliptic,

    /// The supplied map is not an involution of the graph (identity included).
    #[error("map is not an involution: {0}")]
    NotAnInvolution(String),

    /// The orbit graph of the involution is not a tree.
    #[error("quotient by the involution is not a tree")]
    QuotientNotTree,

    /// A documented internal invariant failed; indicates a library bug.
    #[error("internal assertion failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
