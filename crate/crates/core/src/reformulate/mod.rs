//! Explicit LP reformulation of the uncertain constraint system.
//!
//! For every stage `t`, summand `s <= t` and fragment `ξ` the linking rows
//! define `y^t_{sξ} = Σ_{τ=s..t} A^{tτ} u^τ_{sξ} − β^t_{sξ}`. The DP rows
//! bound `z^t_{s,η} >= y^t_{s,(η,ξ_s)} + z^t_{s+1,(tail η, ξ_s)}`, so the
//! smallest feasible root `z^t_{0}` is the worst trajectory sum of `y^t`, and
//! the root rows require it to be nonpositive.

mod build;
mod catalog;

pub use build::{
    add_worstcase, build_discrete_lp, build_lp, build_memoryless_uncertain_matrix_lp, count_sizes, AssembledLp,
    SizeReport, UncertainMatrixSpec, MAX_ASSEMBLED_VARIABLES,
};
pub use catalog::{Constraint, Layout, RowCatalog, Variable, VariableCatalog};
