//! Exact divisor theory on metric graphs.
//!
//! This crate computes with divisors on compact metric graphs (finite
//! multigraphs with positive rational edge lengths) using exact rational
//! arithmetic throughout: reduced divisors via burning and firing, linear
//! equivalence, Baker-Norine rank, hyperelliptic involutions and their
//! quotient trees, theta characteristics in normal form, and the symbolic
//! count of curve theta characteristics specializing to each graph one.

pub mod curve;
pub mod divisor;
pub mod error;
pub mod graph;
pub mod hyperelliptic;
pub mod io;
pub mod rank;
pub mod rational;
pub mod reduce;
pub mod theta;

pub mod cli;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use divisor::{Coeff, Divisor, EdgeProfile, PLFunction};
pub use error::{Error, Result};
pub use graph::{Contraction, Edge, EdgeId, GraphPoint, MetricGraph, Subdivision, TangentDirection, VertexId};
pub use rational::Rational;
