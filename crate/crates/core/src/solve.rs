//! Solving assembled problems with the reference simplex or a plugin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::mps::LpNames;
use crate::lp::plugin::PluginSolver;
use crate::lp::{self, LpStatus, SolveResult, SolverOptions, SparseLp};
use crate::model::{ProblemSpec, RuleCoefficients};
use crate::reformulate::{build_lp, AssembledLp};

#[derive(Debug, Clone)]
pub enum Backend {
    Reference(SolverOptions),
    Plugin(PluginSolver),
}

impl Default for Backend {
    fn default() -> Self {
        Backend::Reference(SolverOptions::default())
    }
}

impl Backend {
    /// `reference` or `plugin:NAME` (looked up in the environment).
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            None if spec == "reference" => Ok(Backend::default()),
            Some(("plugin", name)) if !name.is_empty() => Ok(Backend::Plugin(PluginSolver::from_env(name)?)),
            _ => Err(Error::InvalidProblem(format!(
                "unknown solver `{spec}`; expected `reference` or `plugin:NAME`"
            ))),
        }
    }

    /// Solve a raw LP; `names` is only consulted by plugins.
    pub fn solve(&self, lp: &SparseLp, names: impl FnOnce() -> LpNames) -> Result<SolveResult> {
        match self {
            Backend::Reference(opts) => lp::solve(lp, opts),
            Backend::Plugin(plugin) => plugin.solve(lp, &names()),
        }
    }
}

/// An optimal decision rule and its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub rule: RuleCoefficients,
    pub value: f64,
    /// Optimal `w` when the objective is worst-case.
    pub worst_case: Option<f64>,
    pub iterations: usize,
}

/// Solve an assembled LP, mapping infeasibility back to the original stage
/// and row.
pub fn solve_assembled(asm: &AssembledLp, backend: &Backend) -> Result<Solution> {
    let result = backend.solve(asm.lp(), || asm.names())?;
    match result.status {
        LpStatus::Optimal => Ok(Solution {
            rule: asm.extract_rule(&result.x),
            value: result.objective,
            worst_case: asm.worst_case_value(&result.x),
            iterations: result.iterations,
        }),
        LpStatus::Infeasible => Err(asm.diagnose(&result.infeasible_rows)),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

/// Assemble and solve in one step.
pub fn solve_problem(spec: &ProblemSpec, backend: &Backend) -> Result<Solution> {
    solve_assembled(&build_lp(spec)?, backend)
}
