//! Problem description, fragment index algebra and additive coefficient tables.

mod additive;
mod fragment;
pub mod io;
mod spec;

pub use additive::{AdditiveRhs, AdditiveTable, RuleCoefficients};
pub use fragment::FragmentSpace;
pub use spec::{ObjectiveSpec, ProblemSpec, SparseBlock, StageBlock, WeightedScenario};

pub(crate) use additive::pair_index;

use crate::error::Result;

/// Flat index of a full-depth fragment tuple.
pub fn fragment_index(space: &FragmentSpace, fragment: &[usize]) -> Result<usize> {
    space.index(fragment)
}

/// Re-express a right-hand side at a deeper memory.
pub fn widen_memory(rhs: &AdditiveRhs, depth: usize) -> Result<AdditiveRhs> {
    rhs.widen(depth)
}

/// `b_t(ξ^t)` for a trajectory prefix covering stages `0..=t`.
pub fn eval_rhs(rhs: &AdditiveRhs, t: usize, trajectory: &[usize]) -> Result<Vec<f64>> {
    rhs.evaluate(t, trajectory)
}

/// `x_t(ξ^t)` for a trajectory prefix covering stages `0..=t`.
pub fn eval_policy(rule: &RuleCoefficients, t: usize, trajectory: &[usize]) -> Result<Vec<f64>> {
    rule.evaluate(t, trajectory)
}

/// Every trajectory of `D_0 × ... × D_{N-1}` in lexicographic order.
pub fn all_trajectories(d: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = d.iter().product();
    (0..total).map(move |mut k| {
        let mut xi = vec![0; d.len()];
        for s in (0..d.len()).rev() {
            xi[s] = k % d[s];
            k /= d[s];
        }
        xi
    })
}
