use serde::{Deserialize, Serialize};

use super::additive::{pair_index, AdditiveRhs, RuleCoefficients};
use crate::error::{Error, Result};

/// Sparse matrix block stored row-wise, duplicate entries summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseBlock {
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<(usize, f64)>>,
}

impl SparseBlock {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseBlock {
            rows,
            cols,
            row_entries: vec![Vec::new(); rows],
        }
    }

    /// Build from `(row, col, value)` triplets (0-based).
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut block = SparseBlock::zeros(rows, cols);
        for &(i, j, v) in triplets {
            block.add(i, j, v)?;
        }
        Ok(block)
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let mut block = SparseBlock::zeros(rows, cols);
        for (i, row) in dense.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch("ragged dense matrix".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    block.add(i, j, v)?;
                }
            }
        }
        Ok(block)
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({row}, {col}) outside {}x{} block",
                self.rows, self.cols
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidProblem(format!("non-finite entry at ({row}, {col})")));
        }
        let entries = &mut self.row_entries[row];
        match entries.binary_search_by_key(&col, |e| e.0) {
            Ok(pos) => entries[pos].1 += value,
            Err(pos) => entries.insert(pos, (col, value)),
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.row_entries[i]
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.row_entries
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }

    /// `out += self * x`.
    pub fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.row_entries) {
            for &(j, v) in row {
                *o += v * x[j];
            }
        }
    }

    /// Append rows below this block.
    pub(crate) fn extend_rows(&mut self, rows: Vec<Vec<(usize, f64)>>) {
        self.rows += rows.len();
        self.row_entries.extend(rows);
    }
}

/// A scenario with an explicit weight, used by sample-average objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedScenario {
    pub xi: Vec<usize>,
    pub weight: f64,
}

/// What the decision rule is optimized for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveSpec {
    /// Expected stage costs `Σ f_tᵀ x_t` under independent stage marginals.
    Expected {
        costs: Vec<Vec<f64>>,
        probabilities: Vec<Vec<f64>>,
    },
    /// Weighted costs over an explicit scenario list.
    Saa {
        costs: Vec<Vec<f64>>,
        scenarios: Vec<WeightedScenario>,
    },
    /// Worst case over all trajectories of `max_ℓ Σ_t h_{tℓ}ᵀ x_t`;
    /// `functionals[ℓ][t]` is `h_{tℓ}`.
    WorstCase { functionals: Vec<Vec<Vec<f64>>> },
}

impl ObjectiveSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Expected { .. } => "expected",
            ObjectiveSpec::Saa { .. } => "saa",
            ObjectiveSpec::WorstCase { .. } => "worst_case",
        }
    }

    /// Per-stage linear cost vectors, if the objective has them.
    pub fn costs(&self) -> Option<&[Vec<f64>]> {
        match self {
            ObjectiveSpec::Expected { costs, .. } | ObjectiveSpec::Saa { costs, .. } => Some(costs),
            ObjectiveSpec::WorstCase { .. } => None,
        }
    }

    /// Stage marginals, if the objective carries a distribution.
    pub fn probabilities(&self) -> Option<&[Vec<f64>]> {
        match self {
            ObjectiveSpec::Expected { probabilities, .. } => Some(probabilities),
            _ => None,
        }
    }

    /// Scalar objective of a realized control trajectory.
    pub fn stage_cost(&self, controls: &[Vec<f64>]) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        match self {
            ObjectiveSpec::Expected { costs, .. } | ObjectiveSpec::Saa { costs, .. } => costs
                .iter()
                .zip(controls)
                .map(|(f, x)| dot(f, x))
                .sum(),
            ObjectiveSpec::WorstCase { functionals } => functionals
                .iter()
                .map(|h| h.iter().zip(controls).map(|(h, x)| dot(h, x)).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn validate(&self, n: &[usize], d: &[usize]) -> Result<()> {
        let stages = n.len();
        let check_costs = |costs: &[Vec<f64>]| -> Result<()> {
            if costs.len() != stages {
                return Err(Error::InvalidProblem(format!(
                    "{} cost vectors for {stages} stages",
                    costs.len()
                )));
            }
            for (t, f) in costs.iter().enumerate() {
                if f.len() != n[t] {
                    return Err(Error::DimensionMismatch(format!(
                        "cost vector of stage {t} has length {}, expected {}",
                        f.len(),
                        n[t]
                    )));
                }
                if f.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidProblem(format!("non-finite cost at stage {t}")));
                }
            }
            Ok(())
        };
        match self {
            ObjectiveSpec::Expected {
                costs,
                probabilities,
            } => {
                check_costs(costs)?;
                if probabilities.len() != stages {
                    return Err(Error::InvalidProblem(format!(
                        "{} marginals for {stages} stages",
                        probabilities.len()
                    )));
                }
                for (t, p) in probabilities.iter().enumerate() {
                    if p.len() != d[t] {
                        return Err(Error::DimensionMismatch(format!(
                            "marginal of stage {t} has {} entries, expected {}",
                            p.len(),
                            d[t]
                        )));
                    }
                    let total: f64 = p.iter().sum();
                    if p.iter().any(|&v| !(v >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidProblem(format!(
                            "marginal of stage {t} is not a probability vector"
                        )));
                    }
                }
            }
            ObjectiveSpec::Saa { costs, scenarios } => {
                check_costs(costs)?;
                if scenarios.is_empty() {
                    return Err(Error::InvalidProblem("empty scenario list".into()));
                }
                for sc in scenarios {
                    if sc.xi.len() != stages || sc.xi.iter().zip(d).any(|(&v, &r)| v >= r) {
                        return Err(Error::IndexOutOfRange(format!(
                            "scenario {:?} is not a full trajectory",
                            sc.xi
                        )));
                    }
                    if !(sc.weight >= 0.0) || !sc.weight.is_finite() {
                        return Err(Error::InvalidProblem("negative scenario weight".into()));
                    }
                }
            }
            ObjectiveSpec::WorstCase { functionals } => {
                if functionals.is_empty() {
                    return Err(Error::InvalidProblem(
                        "worst-case objective needs at least one functional".into(),
                    ));
                }
                for h in functionals {
                    check_costs(h)?;
                }
            }
        }
        Ok(())
    }
}

/// A multistage problem `Σ_{τ<=t} A^{tτ} x_τ(ξ^τ) <= b_t(ξ^t)` with additive
/// right-hand sides. Stages are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    n: Vec<usize>,
    m: Vec<usize>,
    d: Vec<usize>,
    mu: usize,
    /// Lower-triangular block storage; `None` is a zero block.
    a: Vec<Option<SparseBlock>>,
    rhs: AdditiveRhs,
    objective: ObjectiveSpec,
}

/// A matrix block `A^{tτ}` with its stage pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StageBlock {
    pub t: usize,
    pub tau: usize,
    pub block: SparseBlock,
}

impl ProblemSpec {
    /// Validated construction. The right-hand side may have a shallower
    /// memory than `mu`; it is widened to `mu`.
    pub fn new(
        n: Vec<usize>,
        m: Vec<usize>,
        d: Vec<usize>,
        mu: usize,
        blocks: Vec<StageBlock>,
        rhs: AdditiveRhs,
        objective: ObjectiveSpec,
    ) -> Result<Self> {
        let stages = n.len();
        if stages == 0 {
            return Err(Error::InvalidProblem("at least one stage is required".into()));
        }
        if m.len() != stages || d.len() != stages {
            return Err(Error::DimensionMismatch(format!(
                "n, m, d have lengths {}, {}, {}",
                n.len(),
                m.len(),
                d.len()
            )));
        }
        if mu == 0 {
            return Err(Error::InvalidProblem("memory depth must be >= 1".into()));
        }
        if n.iter().chain(&m).chain(&d).any(|&v| v == 0) {
            return Err(Error::InvalidProblem("n_t, m_t and d_t must all be >= 1".into()));
        }
        let mut a: Vec<Option<SparseBlock>> = vec![None; stages * (stages + 1) / 2];
        for StageBlock { t, tau, block } in blocks {
            if t >= stages || tau > t {
                return Err(Error::InvalidProblem(format!(
                    "block A^({t},{tau}) is not lower block-triangular within {stages} stages"
                )));
            }
            if block.rows() != m[t] || block.cols() != n[tau] {
                return Err(Error::DimensionMismatch(format!(
                    "block A^({t},{tau}) is {}x{}, expected {}x{}",
                    block.rows(),
                    block.cols(),
                    m[t],
                    n[tau]
                )));
            }
            let slot = &mut a[pair_index(t, tau)];
            match slot {
                Some(existing) => {
                    for (i, j, v) in block.triplets() {
                        existing.add(i, j, v)?;
                    }
                }
                None => *slot = Some(block),
            }
        }
        if rhs.radices() != d.as_slice() || rhs.widths() != m.as_slice() {
            return Err(Error::DimensionMismatch(
                "right-hand side table does not match (d, m)".into(),
            ));
        }
        if rhs.depth() > mu {
            return Err(Error::InvalidWidening {
                from: rhs.depth(),
                to: mu,
            });
        }
        let rhs = rhs.widen(mu)?;
        objective.validate(&n, &d)?;
        Ok(ProblemSpec {
            n,
            m,
            d,
            mu,
            a,
            rhs,
            objective,
        })
    }

    pub fn stages(&self) -> usize {
        self.n.len()
    }

    pub fn n(&self) -> &[usize] {
        &self.n
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn d(&self) -> &[usize] {
        &self.d
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn rhs(&self) -> &AdditiveRhs {
        &self.rhs
    }

    pub fn objective(&self) -> &ObjectiveSpec {
        &self.objective
    }

    /// `A^{tτ}`, or `None` for a zero block.
    pub fn block(&self, t: usize, tau: usize) -> Option<&SparseBlock> {
        if tau > t || t >= self.stages() {
            return None;
        }
        self.a[pair_index(t, tau)].as_ref()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, &SparseBlock)> + '_ {
        (0..self.stages()).flat_map(move |t| {
            (0..=t).filter_map(move |tau| self.block(t, tau).map(|b| (t, tau, b)))
        })
    }

    /// Same problem with memory depth raised to `mu`.
    pub fn with_memory(&self, mu: usize) -> Result<Self> {
        if mu < self.mu {
            return Err(Error::InvalidWidening {
                from: self.mu,
                to: mu,
            });
        }
        let mut widened = self.clone();
        widened.rhs = self.rhs.widen(mu)?;
        widened.mu = mu;
        Ok(widened)
    }

    pub fn with_objective(&self, objective: ObjectiveSpec) -> Result<Self> {
        objective.validate(&self.n, &self.d)?;
        let mut out = self.clone();
        out.objective = objective;
        Ok(out)
    }

    /// Number of full trajectories `Π d_t`, saturating.
    pub fn trajectory_count(&self) -> u128 {
        self.d
            .iter()
            .fold(1u128, |acc, &v| acc.saturating_mul(v as u128))
    }

    /// Zero rule coefficients shaped for this problem.
    pub fn zero_rule(&self) -> RuleCoefficients {
        RuleCoefficients::zeros(&self.d, &self.n, self.mu).expect("validated shape")
    }

    /// Left-hand side `Σ_{τ<=t} A^{tτ} x_τ` for a realized control trajectory.
    pub fn lhs(&self, t: usize, controls: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.m[t]];
        for (tau, x) in controls.iter().enumerate().take(t + 1) {
            if let Some(block) = self.block(t, tau) {
                block.mul_add(x, &mut out);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forced_rhs() -> AdditiveRhs {
        let mut rhs = AdditiveRhs::zeros(&[2], &[1], 1).unwrap();
        rhs.set(0, 0, &[0], &[-1.0]).unwrap();
        rhs.set(0, 0, &[1], &[-2.0]).unwrap();
        rhs
    }

    fn expected() -> ObjectiveSpec {
        ObjectiveSpec::Expected {
            costs: vec![vec![1.0]],
            probabilities: vec![vec![0.5, 0.5]],
        }
    }

    #[test]
    fn rejects_misshaped_blocks() {
        let block = SparseBlock::zeros(2, 1);
        let err = ProblemSpec::new(
            vec![1],
            vec![1],
            vec![2],
            1,
            vec![StageBlock { t: 0, tau: 0, block }],
            forced_rhs(),
            expected(),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let upper = ProblemSpec::new(
            vec![1, 1],
            vec![1, 1],
            vec![2, 2],
            1,
            vec![StageBlock {
                t: 0,
                tau: 1,
                block: SparseBlock::zeros(1, 1),
            }],
            AdditiveRhs::zeros(&[2, 2], &[1, 1], 1).unwrap(),
            ObjectiveSpec::Expected {
                costs: vec![vec![0.0], vec![0.0]],
                probabilities: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            },
        );
        assert!(upper.is_err());
    }

    #[test]
    fn rejects_bad_marginals() {
        let bad = ObjectiveSpec::Expected {
            costs: vec![vec![1.0]],
            probabilities: vec![vec![0.5, 0.6]],
        };
        let spec = ProblemSpec::new(vec![1], vec![1], vec![2], 1, vec![], forced_rhs(), bad);
        assert!(matches!(spec, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn worst_case_needs_a_functional() {
        let spec = ProblemSpec::new(
            vec![1],
            vec![1],
            vec![2],
            1,
            vec![],
            forced_rhs(),
            ObjectiveSpec::WorstCase {
                functionals: vec![],
            },
        );
        assert!(spec.is_err());
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let block = SparseBlock::from_triplets(1, 2, &[(0, 1, 1.5), (0, 1, 2.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(block.row(0), &[(0, 1.0), (1, 3.5)]);
        assert!(SparseBlock::from_triplets(1, 2, &[(1, 0, 1.0)]).is_err());
        assert!(SparseBlock::from_triplets(1, 2, &[(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn memory_widening_keeps_rhs_values() {
        let spec = ProblemSpec::new(vec![1], vec![1], vec![2], 1, vec![], forced_rhs(), expected())
            .unwrap();
        let wide = spec.with_memory(3).unwrap();
        assert_eq!(wide.mu(), 3);
        for xi in 0..2 {
            assert_eq!(
                wide.rhs().evaluate(0, &[xi]).unwrap(),
                spec.rhs().evaluate(0, &[xi]).unwrap()
            );
        }
        assert!(wide.with_memory(2).is_err());
    }
}
