//! Brute-force ground truth for desk-scale instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LpStatus, Relation, SolverOptions, SparseLp};
use crate::model::{all_trajectories, ObjectiveSpec, ProblemSpec, RuleCoefficients};

/// Largest `Π d_t` [`brute_force_max`] will enumerate.
pub const MAX_TRAJECTORIES: u128 = 1_000_000;
/// Largest node count [`scenario_tree_lp`] will instantiate.
pub const MAX_TREE_NODES: u128 = 100_000;

fn check_rule(spec: &ProblemSpec, rule: &RuleCoefficients) -> Result<()> {
    if rule.radices() != spec.d() || rule.widths() != spec.n() || rule.depth() != spec.mu() {
        return Err(Error::DimensionMismatch("rule shape does not match the problem".into()));
    }
    Ok(())
}

/// `y^t_{s,ξ} = Σ_{τ=s..t} A^{tτ} u^τ_{s,ξ} − β^t_{s,ξ}` for every fragment, by `s`.
fn linking_values(spec: &ProblemSpec, rule: &RuleCoefficients, t: usize) -> Vec<Vec<Vec<f64>>> {
    let m = spec.m()[t];
    (0..=t)
        .map(|s| {
            let space = rule.space(s);
            (0..space.size())
                .map(|xi| {
                    let mut y = vec![0.0; m];
                    for tau in s..=t {
                        if let Some(a) = spec.block(t, tau) {
                            a.mul_add(rule.coeff(tau, s, xi), &mut y);
                        }
                    }
                    for (v, b) in y.iter_mut().zip(spec.rhs().coeff(t, s, xi)) {
                        *v -= b;
                    }
                    y
                })
                .collect()
        })
        .collect()
}

/// Entrywise maximum over all trajectories of `Σ_{s<=t} y^t_{s,ξ_{s-μ+1:s}}`.
/// The rule satisfies the stage-`t` constraints everywhere iff this is `<= 0`.
pub fn brute_force_max(spec: &ProblemSpec, rule: &RuleCoefficients, t: usize) -> Result<Vec<f64>> {
    check_rule(spec, rule)?;
    if t >= spec.stages() {
        return Err(Error::IndexOutOfRange(format!("stage {t} of {}", spec.stages())));
    }
    let count = spec.trajectory_count();
    if count > MAX_TRAJECTORIES {
        return Err(Error::SizeGuard {
            what: "trajectories",
            size: count,
            limit: MAX_TRAJECTORIES,
        });
    }
    let y = linking_values(spec, rule, t);
    let spaces: Vec<_> = (0..=t).map(|s| rule.space(s)).collect();
    let mut best = vec![f64::NEG_INFINITY; spec.m()[t]];
    // y^t only depends on ξ_0..ξ_t
    for xi in all_trajectories(&spec.d()[..=t]) {
        let mut sum = vec![0.0; spec.m()[t]];
        for (s, space) in spaces.iter().enumerate() {
            for (acc, v) in sum.iter_mut().zip(&y[s][space.index_in(&xi)]) {
                *acc += v;
            }
        }
        for (b, v) in best.iter_mut().zip(sum) {
            *b = b.max(v);
        }
    }
    Ok(best)
}

/// [`brute_force_max`] for every stage.
pub fn brute_force_all(spec: &ProblemSpec, rule: &RuleCoefficients) -> Result<Vec<Vec<f64>>> {
    (0..spec.stages()).map(|t| brute_force_max(spec, rule, t)).collect()
}

/// A node of the scenario tree: the trajectory prefix `ξ_0..ξ_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub stage: usize,
    pub prefix: Vec<usize>,
    /// First of the `n_t` decision columns of this node.
    pub col: usize,
}

/// Deterministic-equivalent LP over the prefix tree of `D_0 × ... × D_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeLp {
    pub lp: SparseLp,
    /// Depth-first lexicographic order.
    pub nodes: Vec<TreeNode>,
    /// Worst-case epigraph column, if any.
    pub w: Option<usize>,
    node_of: Vec<Vec<usize>>,
}

impl TreeLp {
    /// Node holding the decision of stage `t` along `prefix` (length `>= t+1`).
    pub fn node(&self, t: usize, prefix: &[usize], d: &[usize]) -> &TreeNode {
        let mut flat = 0;
        for s in 0..=t {
            flat = flat * d[s] + prefix[s];
        }
        &self.nodes[self.node_of[t][flat]]
    }
}

/// Node count `Σ_t Π_{s<=t} d_s`, saturating.
pub fn tree_node_count(d: &[usize]) -> u128 {
    let mut total = 0u128;
    let mut level = 1u128;
    for &r in d {
        level = level.saturating_mul(r as u128);
        total = total.saturating_add(level);
    }
    total
}

/// Build the scenario-tree LP: one decision vector per node, constraints on
/// every node path, objective weighted by path probabilities (or scenario
/// weights, or a worst-case epigraph).
pub fn scenario_tree_lp(spec: &ProblemSpec) -> Result<TreeLp> {
    let d = spec.d();
    let count = tree_node_count(d);
    if count > MAX_TREE_NODES {
        return Err(Error::SizeGuard {
            what: "scenario tree nodes",
            size: count,
            limit: MAX_TREE_NODES,
        });
    }
    let stages = spec.stages();
    let n = spec.n();

    let mut nodes = Vec::with_capacity(count as usize);
    let mut node_of: Vec<Vec<usize>> = (0..stages)
        .map(|t| vec![usize::MAX; d[..=t].iter().product()])
        .collect();
    let mut next_col = 0;
    let mut stack: Vec<Vec<usize>> = (0..d[0]).rev().map(|v| vec![v]).collect();
    while let Some(prefix) = stack.pop() {
        let t = prefix.len() - 1;
        let flat = prefix.iter().zip(d).fold(0, |acc, (&v, &r)| acc * r + v);
        node_of[t][flat] = nodes.len();
        nodes.push(TreeNode {
            stage: t,
            prefix: prefix.clone(),
            col: next_col,
        });
        next_col += n[t];
        if t + 1 < stages {
            for v in (0..d[t + 1]).rev() {
                let mut child = prefix.clone();
                child.push(v);
                stack.push(child);
            }
        }
    }

    let worst_case = matches!(spec.objective(), ObjectiveSpec::WorstCase { .. });
    let w = worst_case.then_some(next_col);
    let mut lp = SparseLp::new(next_col + usize::from(worst_case));
    let mut tree = TreeLp {
        lp: SparseLp::new(0),
        nodes,
        w,
        node_of,
    };

    let cols_on_path = |tree: &TreeLp, t: usize, prefix: &[usize]| -> Vec<usize> {
        (0..=t).map(|tau| tree.node(tau, prefix, d).col).collect()
    };

    for k in 0..tree.nodes.len() {
        let (t, prefix) = (tree.nodes[k].stage, tree.nodes[k].prefix.clone());
        let path = cols_on_path(&tree, t, &prefix);
        let b = spec.rhs().evaluate(t, &prefix)?;
        for (i, &rhs) in b.iter().enumerate() {
            let mut coeffs = Vec::new();
            for (tau, &col) in path.iter().enumerate() {
                if let Some(a) = spec.block(t, tau) {
                    coeffs.extend(a.row(i).iter().map(|&(j, v)| (col + j, v)));
                }
            }
            lp.add_row(coeffs, Relation::Le, rhs)?;
        }
    }

    match spec.objective() {
        ObjectiveSpec::Expected {
            costs,
            probabilities,
        } => {
            for node in &tree.nodes {
                let p: f64 = node
                    .prefix
                    .iter()
                    .enumerate()
                    .map(|(s, &v)| probabilities[s][v])
                    .product();
                for (j, &f) in costs[node.stage].iter().enumerate() {
                    lp.add_cost(node.col + j, p * f);
                }
            }
        }
        ObjectiveSpec::Saa { costs, scenarios } => {
            for sc in scenarios {
                for (t, col) in cols_on_path(&tree, stages - 1, &sc.xi).into_iter().enumerate() {
                    for (j, &f) in costs[t].iter().enumerate() {
                        lp.add_cost(col + j, sc.weight * f);
                    }
                }
            }
        }
        ObjectiveSpec::WorstCase { functionals } => {
            let wcol = w.expect("worst-case column");
            lp.set_cost(wcol, 1.0);
            for leaf in tree.nodes.iter().filter(|nd| nd.stage == stages - 1) {
                let path = cols_on_path(&tree, stages - 1, &leaf.prefix);
                for h in functionals {
                    let mut coeffs = vec![(wcol, -1.0)];
                    for (t, &col) in path.iter().enumerate() {
                        coeffs.extend(h[t].iter().enumerate().map(|(j, &v)| (col + j, v)));
                    }
                    lp.add_row(coeffs, Relation::Le, 0.0)?;
                }
            }
        }
    }
    tree.lp = lp;
    Ok(tree)
}

/// Optimal value of the scenario-tree LP with the reference solver.
pub fn tree_value(spec: &ProblemSpec, opts: &SolverOptions) -> Result<f64> {
    let tree = scenario_tree_lp(spec)?;
    let r = crate::lp::solve(&tree.lp, opts)?;
    match r.status {
        LpStatus::Optimal => Ok(r.objective),
        LpStatus::Infeasible => Err(Error::Infeasible { stage: 0, row: 0 }),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

/// Brute force against the LP extension for one fixed rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    /// The assembled LP with `u` fixed to the rule has a feasible point.
    pub lp_feasible: bool,
    /// `max_ξ [A x(ξ) − b(ξ)]_i` for every stage and row.
    pub brute_force_max: Vec<Vec<f64>>,
    pub brute_force_feasible: bool,
    pub agree: bool,
}

/// `tolerance` is the largest brute-force excess still counted as feasible.
pub fn feasibility_verdict(
    spec: &ProblemSpec,
    rule: &RuleCoefficients,
    tolerance: f64,
    opts: &SolverOptions,
) -> Result<FeasibilityVerdict> {
    let bf = brute_force_all(spec, rule)?;
    let brute_force_feasible = bf.iter().flatten().all(|&v| v <= tolerance);
    let asm = crate::reformulate::build_discrete_lp(&spec.with_objective(zero_objective(spec))?)?;
    let lp = asm.with_rule_fixed(rule)?;
    let lp_feasible = crate::lp::solve(&lp, opts)?.status == LpStatus::Optimal;
    Ok(FeasibilityVerdict {
        lp_feasible,
        brute_force_max: bf,
        brute_force_feasible,
        agree: lp_feasible == brute_force_feasible,
    })
}

/// A pure feasibility objective: zero expected cost under uniform marginals.
fn zero_objective(spec: &ProblemSpec) -> ObjectiveSpec {
    ObjectiveSpec::Expected {
        costs: spec.n().iter().map(|&n| vec![0.0; n]).collect(),
        probabilities: spec.d().iter().map(|&d| vec![1.0 / d as f64; d]).collect(),
    }
}

/// Optimal CDDR value at the problem's memory against the scenario tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeVerdict {
    pub mu: usize,
    pub cddr_value: f64,
    pub tree_value: f64,
    pub relative_gap: f64,
    /// `mu >= N`, where the two values must coincide.
    pub full_memory: bool,
    /// The CDDR value is no better than the tree, and equal at full memory.
    pub consistent: bool,
}

pub fn tree_verdict(spec: &ProblemSpec, backend: &crate::solve::Backend, tolerance: f64) -> Result<TreeVerdict> {
    let cddr_value = crate::solve::solve_problem(spec, backend)?.value;
    let tree_value = tree_value(spec, &SolverOptions::default())?;
    let relative_gap = (cddr_value - tree_value) / tree_value.abs().max(1.0);
    let full_memory = spec.mu() >= spec.stages();
    let consistent = relative_gap >= -tolerance && (!full_memory || relative_gap.abs() <= tolerance);
    Ok(TreeVerdict {
        mu: spec.mu(),
        cddr_value,
        tree_value,
        relative_gap,
        full_memory,
        consistent,
    })
}
