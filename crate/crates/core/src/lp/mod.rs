//! Sparse LP container, the reference simplex solver, MPS exchange and
//! external solver plugins.

mod lu;
pub mod mps;
pub mod plugin;
mod simplex;
mod sparse;

pub use simplex::{solve, LpStatus, SolveResult, SolverOptions};
pub use sparse::{LpDump, LpRow, Relation, SparseLp};
