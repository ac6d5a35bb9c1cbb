//! Continuous local search for finite-domain constraint satisfaction.
//!
//! Every constraint is compiled to an ordered multi-valued decision diagram
//! (or a closed form for a few structured families). The solver relaxes each
//! variable to a probability row, maximizes the summed circuit-output
//! probability by projected gradient ascent over the product of simplices,
//! and rounds the result back to a discrete assignment.
//!
//! Module map:
//!
//! - [`model`]: instances, the constraint-expression language, text formats
//!   and brute-force oracles.
//! - [`mdd`]: compilation to MDDs, `apply`, reduction and the `.mdd` edge-table
//!   format.
//! - [`cop`]: top-down / bottom-up message passing, gradients, closed forms and
//!   the weighted objective.
//! - [`optimizer`]: simplex projection, projected gradient ascent, rounding and
//!   the restart loop.
//! - [`batch`]: level-synchronous traversal of many padded edge tables at once.
//! - [`benchmarks`]: instance generators, exact verification and scoring metrics.

pub mod batch;
pub mod benchmarks;
pub mod cop;
mod error;
pub mod mdd;
pub mod model;
pub mod optimizer;

pub use cop::{Gradient, RowMatrix, SimplexPoint};
pub use error::{Error, Result};
pub use mdd::{Mdd, NodeRef, VariableOrder};
pub use model::{
    Constraint, ConstraintBody, DiscreteAssignment, Domain, Expr, Instance, ObjectiveMode,
    StructuredKind, VariableId,
};
pub use optimizer::{RoundingMode, SolveReport, SolverConfig, StepSize};
